#pragma once

// Post-training diagnostics: class-mean convergence, the in-class loss lower
// bound, the reconstruction-error expansion, latent-neighbourhood mutual
// information, 2-D vector fields, manifold contraction and PCA projections.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "icrst/ndcore.hpp"
#include "icrst/nn.hpp"
#include "icrst/sampling.hpp"

namespace icrst {

struct ClassGap {
  std::size_t cls = 0;
  double absolute = 0.0;  // ||mean f(g(X_j)) - mu_j||_2
  double relative = 0.0;  // absolute / ||mu_j||_2 (infinite when mu_j = 0 and gap > 0)
};

struct ConvergenceReport {
  std::vector<ClassGap> classes;
  std::string to_json() const;
};

ConvergenceReport check_mean_convergence(const Network& net, const Matrix& data, const LabelVector& labels);

struct ClassBound {
  std::size_t cls = 0;
  double loss = 0.0;            // Monte-Carlo E||y - f(g(x))||^2, unhalved
  double target_variance = 0.0; // sum over features of Var_j(Y)
  double output_variance = 0.0; // sum over features of Var_j(f(g(X)))
  double bound = 0.0;           // target_variance + output_variance
  double slack = 0.0;           // loss - bound
  std::size_t trials = 0;
};

struct BoundReport {
  std::vector<ClassBound> classes;
  std::string to_json() const;
};

/// For ICRST every class is checked with in-class pairs; for TRST the whole
/// dataset is one group. Throws DegenerateClassError for groups with fewer
/// than two rows and ConfigError for the Standard mode.
BoundReport check_loss_bound(const Network& net, const Matrix& data, const LabelVector* labels,
                             const TrainingMode& mode, std::size_t trials, std::uint64_t seed);

struct ReconstructionIdentity {
  double lhs = 0.0;           // sum_k E[(f(g(X))_k - X_k)^2]
  double rhs = 0.0;           // sum_k E[f_k^2] + E[X_k^2] - 2 E[X_k f_k]
  double max_residual = 0.0;  // max over the summed and the per-feature |lhs - rhs|
};

ReconstructionIdentity reconstruction_identity(const Network& net, const Matrix& data);

struct MIConfig {
  std::size_t samples = 150;
  std::size_t neighbors = 20;
  std::size_t bins = 32;
  std::size_t channels = 1;
  std::uint64_t seed = 0;
};

/// Plug-in MI (natural log) from the bins x bins joint histogram of the
/// co-located values of two equally sized images. Values are binned over
/// [0,1]; out-of-range values fall in the edge bins.
double histogram_mutual_information(std::span<const double> a, std::span<const double> b, std::size_t bins);
/// Entropy (natural log) of one image under the same binning.
double histogram_entropy(std::span<const double> a, std::size_t bins);

struct MutualInformationEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // across sampled anchors
  std::size_t samples = 0;
  std::size_t neighbors = 0;
  std::string to_json() const;
};

/// `images` are the [0,1]-scaled observations; `latents` their row-aligned
/// codes. Samples anchors without replacement, takes each anchor's K nearest
/// latent neighbours (itself excluded) and averages the per-channel pairwise
/// image MI over neighbours, channels and anchors.
MutualInformationEstimate estimate_mutual_information(const Matrix& images, const Matrix& latents,
                                                      const MIConfig& cfg);
MutualInformationEstimate estimate_mutual_information(const Network& net, const Matrix& inputs,
                                                      const Matrix& images, const MIConfig& cfg);

struct GridSpec {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
  std::size_t steps = 11;  // points per axis
};

struct VectorFieldGrid {
  Matrix points;         // P x 2
  Matrix displacements;  // P x 2, f(g(x)) - x

  void write_csv(std::ostream& out) const;
  /// Quiver plot; arrows scaled by `arrow_scale` in data units.
  void write_svg(std::ostream& out, double arrow_scale = 1.0) const;
};

/// Throws DimensionError unless the network's ambient dimension is 2.
VectorFieldGrid vector_field(const Network& net, const GridSpec& grid);

/// Per class, the fraction of rows with ||f(g(x)) - mu_j|| < ||x - mu_j||.
/// Rows sitting exactly on mu_j are left out of the denominator.
std::vector<double> contraction_ratio(const Network& net, const Matrix& data, const LabelVector& labels);

struct PcaResult {
  Matrix projection;          // rows x dims, centred
  Matrix components;          // dims x cols, unit rows
  std::vector<double> eigenvalues;
};

/// Power iteration with deflation on the covariance matrix (tolerance 1e-10).
PcaResult pca(const Matrix& data, std::size_t dims = 2);
Matrix pca_project(const Matrix& latents, std::size_t dims = 2);

/// x,y,label rows (label column omitted when `labels` is null).
void write_projection_csv(std::ostream& out, const Matrix& projection, const LabelVector* labels);

}  // namespace icrst

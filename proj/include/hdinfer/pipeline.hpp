#pragma once

#include <cstdint>
#include <memory>

#include "hdinfer/dataset.hpp"
#include "hdinfer/desparsify.hpp"
#include "hdinfer/nodewise.hpp"
#include "hdinfer/solvers.hpp"

namespace hdinfer {

struct PipelineOptions {
  double lambda0 = 0.0;          // 0 -> universal tuning constant for (n, p)
  double nodewise_lambda = 0.0;  // 0 -> shared 10-fold CV
  SharedCvOptions cv;
  std::uint64_t cv_seed = 1;
  bool use_modified_sigma = true;  // d.o.f.-corrected noise estimate
  LassoOptions lasso;
};

struct PipelineFit {
  ScaledLassoFit scaled;
  std::shared_ptr<const PrecisionEstimate> precision;
  DesparsifiedFit desp;
  double nodewise_lambda = 0.0;
  double lambda0 = 0.0;
};

/// Full inference pipeline on standardized data:
/// scaled Lasso -> nodewise precision estimate -> de-biased fit.
PipelineFit fit_pipeline(const Dataset& data, const PipelineOptions& opts = {});

/// Variant reusing a precomputed precision estimate and score basis
/// (the design is fixed across simulation replications).
PipelineFit fit_pipeline_cached(const Dataset& data, const PipelineOptions& opts,
                                std::shared_ptr<const PrecisionEstimate> precision,
                                std::shared_ptr<const Eigen::MatrixXd> score_basis,
                                double nodewise_lambda);

}  // namespace hdinfer

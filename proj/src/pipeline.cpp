#include "hdinfer/pipeline.hpp"

#include "hdinfer/errors.hpp"

namespace hdinfer {

PipelineFit fit_pipeline_cached(const Dataset& data, const PipelineOptions& opts,
                                std::shared_ptr<const PrecisionEstimate> precision,
                                std::shared_ptr<const Eigen::MatrixXd> score_basis,
                                double nodewise_lambda) {
  if (!data.standardized)
    fail(ErrorCode::invalid_argument, "pipeline requires a standardized dataset");

  PipelineFit out;
  out.lambda0 = opts.lambda0 > 0.0 ? opts.lambda0 : universal_lambda0(data.n(), data.p());
  out.scaled = scaled_lasso_fit(data, out.lambda0, opts.lasso);
  out.precision = std::move(precision);
  out.nodewise_lambda = nodewise_lambda;

  const double sigma = opts.use_modified_sigma ? out.scaled.sigma_hat_modified : out.scaled.sigma_hat;
  out.desp = desparsify(data, out.scaled.fit, out.precision, sigma * sigma, std::move(score_basis));
  return out;
}

PipelineFit fit_pipeline(const Dataset& data, const PipelineOptions& opts) {
  if (!data.standardized)
    fail(ErrorCode::invalid_argument, "pipeline requires a standardized dataset");

  double lam = opts.nodewise_lambda;
  if (lam <= 0.0) lam = shared_cv_lambda_nodewise(data.X, opts.cv_seed, opts.cv, opts.lasso).first;
  auto precision = std::make_shared<const PrecisionEstimate>(
      precision_estimate(data, Eigen::VectorXd::Constant(data.p(), lam), opts.lasso));
  return fit_pipeline_cached(data, opts, std::move(precision), nullptr, lam);
}

}  // namespace hdinfer

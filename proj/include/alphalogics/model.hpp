#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "alphalogics/dsl.hpp"
#include "alphalogics/matrix.hpp"
#include "alphalogics/panel.hpp"

namespace alphalogics::model {

/// Named (date x instrument) features, each cross-sectionally z-scored.
struct FeatureBlock {
    std::vector<std::string> names;
    std::vector<Matrix> matrices;

    std::size_t size() const noexcept { return names.size(); }
    /// Appends `values` after z-scoring; throws PreconditionError on a
    /// duplicate name or shape mismatch.
    void add(std::string name, const Matrix& values);
};

/// intraday_return, daily_return, rel_volume_20, norm_range.
FeatureBlock base_factors(const Panel& panel);

/// Raw (pre z-score) base factor values, in base_factors order.
std::vector<Matrix> raw_base_factors(const Panel& panel);

/// Base factors (optional) followed by each expression as "factor_<i>".
FeatureBlock build_features(const Panel& panel, const std::vector<dsl::FactorExpr>& factors,
                            bool include_base = true);

enum class ModelKind { Ridge, Passthrough };

struct ScoreModel {
    ModelKind kind = ModelKind::Ridge;
    std::vector<std::string> names;
    std::vector<double> weights;
    double ridge_lambda = 1e-3;

    friend bool operator==(const ScoreModel&, const ScoreModel&) = default;
};

struct FitOptions {
    ModelKind kind = ModelKind::Ridge;
    double ridge_lambda = 1e-3;
    /// Passthrough only: index of the feature used as the score.
    std::size_t passthrough_feature = 0;
};

/// Pooled ridge regression (no intercept) of feature rows on `labels`, using
/// only the dates in `rows` and cells where every feature and the label are
/// present. Throws FitError with fewer than |features|+1 usable rows.
ScoreModel fit(const FeatureBlock& features, const Matrix& labels, IndexRange rows,
               const FitOptions& options = {});

/// Scores for dates in `rows`; other dates are missing. A cell is missing when
/// any contributing feature is missing. Throws PreconditionError when the
/// feature names differ from the model's.
Matrix predict(const ScoreModel& model, const FeatureBlock& features, IndexRange rows);

nlohmann::json to_json(const ScoreModel& m);
ScoreModel model_from_json(const nlohmann::json& j);

} // namespace alphalogics::model

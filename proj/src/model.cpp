#include "alphalogics/model.hpp"

#include <Eigen/Dense>

#include "alphalogics/error.hpp"

namespace alphalogics::model {

void FeatureBlock::add(std::string name, const Matrix& values) {
    for (const std::string& n : names)
        if (n == name) throw PreconditionError("duplicate feature name '" + name + "'");
    if (!matrices.empty() && !matrices.front().same_shape(values))
        throw PreconditionError("feature '" + name + "' has a different shape");
    names.push_back(std::move(name));
    matrices.push_back(cross_sectional_zscore(values));
}

namespace {

// name, definition in the factor language
const std::pair<const char*, const char*> kBaseFactors[] = {
    {"intraday_return", "close / open - 1"},
    {"daily_return", "close / DELAY(close, 1) - 1"},
    {"rel_volume_20", "volume / TS_MEAN(volume, 20)"},
    {"norm_range", "(high - low) / close"},
};

} // namespace

std::vector<Matrix> raw_base_factors(const Panel& panel) {
    std::vector<Matrix> out;
    for (const auto& [name, text] : kBaseFactors) out.push_back(dsl::evaluate(dsl::parse(text), panel));
    return out;
}

FeatureBlock base_factors(const Panel& panel) {
    if (panel.empty()) throw PreconditionError("base factors need a non-empty panel");
    FeatureBlock out;
    auto raw = raw_base_factors(panel);
    for (std::size_t i = 0; i < raw.size(); ++i) out.add(kBaseFactors[i].first, raw[i]);
    return out;
}

FeatureBlock build_features(const Panel& panel, const std::vector<dsl::FactorExpr>& factors,
                            bool include_base) {
    FeatureBlock out = include_base ? base_factors(panel) : FeatureBlock{};
    for (std::size_t i = 0; i < factors.size(); ++i)
        out.add("factor_" + std::to_string(i), dsl::evaluate(factors[i], panel));
    return out;
}

namespace {

void check_block(const FeatureBlock& f) {
    if (f.names.size() != f.matrices.size()) throw PreconditionError("feature block is inconsistent");
    for (const Matrix& m : f.matrices)
        if (!m.same_shape(f.matrices.front())) throw PreconditionError("feature shapes differ");
}

} // namespace

ScoreModel fit(const FeatureBlock& features, const Matrix& labels, IndexRange rows,
               const FitOptions& options) {
    check_block(features);
    const std::size_t p = features.size();
    if (p == 0) throw FitError("no features to fit");
    if (!features.matrices.front().same_shape(labels))
        throw PreconditionError("labels and features have different shapes");
    if (rows.end > labels.rows()) throw PreconditionError("fit rows exceed the panel");

    ScoreModel m;
    m.kind = options.kind;
    m.names = features.names;
    m.ridge_lambda = options.ridge_lambda;
    if (options.kind == ModelKind::Passthrough) {
        if (options.passthrough_feature >= p) throw PreconditionError("passthrough feature out of range");
        m.weights.assign(p, 0.0);
        m.weights[options.passthrough_feature] = 1.0;
        return m;
    }
    if (!(options.ridge_lambda >= 0.0)) throw PreconditionError("ridge lambda must be non-negative");

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    Eigen::VectorXd x(static_cast<Eigen::Index>(p));
    std::size_t usable = 0;
    for (std::size_t t = rows.begin; t < rows.end; ++t)
        for (std::size_t c = 0; c < labels.cols(); ++c) {
            const double y = labels(t, c);
            if (is_missing(y)) continue;
            bool ok = true;
            for (std::size_t k = 0; k < p && ok; ++k) {
                x[static_cast<Eigen::Index>(k)] = features.matrices[k](t, c);
                ok = !is_missing(x[static_cast<Eigen::Index>(k)]);
            }
            if (!ok) continue;
            xtx.selfadjointView<Eigen::Lower>().rankUpdate(x);
            xty += y * x;
            ++usable;
        }
    if (usable < p + 1)
        throw FitError("underdetermined fit: " + std::to_string(usable) + " usable rows for " +
                       std::to_string(p) + " features");
    xtx = xtx.selfadjointView<Eigen::Lower>();
    xtx.diagonal().array() += options.ridge_lambda * static_cast<double>(usable);
    const Eigen::VectorXd w = xtx.completeOrthogonalDecomposition().solve(xty);
    m.weights.assign(w.data(), w.data() + w.size());
    for (double& v : m.weights)
        if (!std::isfinite(v)) throw FitError("ridge solution is not finite");
    return m;
}

Matrix predict(const ScoreModel& model, const FeatureBlock& features, IndexRange rows) {
    check_block(features);
    if (features.names != model.names) throw PreconditionError("feature names do not match the model");
    if (model.weights.size() != model.names.size()) throw PreconditionError("model weights are inconsistent");
    if (features.size() == 0) throw PreconditionError("no features");
    const Matrix& first = features.matrices.front();
    Matrix out(first.rows(), first.cols());
    if (rows.end > first.rows()) throw PreconditionError("predict rows exceed the panel");
    for (std::size_t t = rows.begin; t < rows.end; ++t)
        for (std::size_t c = 0; c < first.cols(); ++c) {
            if (model.kind == ModelKind::Passthrough) {
                for (std::size_t k = 0; k < model.weights.size(); ++k)
                    if (model.weights[k] != 0.0) out(t, c) = features.matrices[k](t, c);
                continue;
            }
            double s = 0.0;
            bool ok = true;
            for (std::size_t k = 0; k < model.weights.size() && ok; ++k) {
                const double v = features.matrices[k](t, c);
                ok = !is_missing(v);
                s += model.weights[k] * v;
            }
            if (ok) out(t, c) = finite_or_missing(s);
        }
    return out;
}

nlohmann::json to_json(const ScoreModel& m) {
    return {{"kind", m.kind == ModelKind::Ridge ? "ridge" : "passthrough"},
            {"features", m.names},
            {"weights", m.weights},
            {"ridge_lambda", m.ridge_lambda}};
}

ScoreModel model_from_json(const nlohmann::json& j) {
    try {
        ScoreModel m;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "ridge") m.kind = ModelKind::Ridge;
        else if (kind == "passthrough") m.kind = ModelKind::Passthrough;
        else throw SchemaError("unknown model kind '" + kind + "'");
        m.names = j.at("features").get<std::vector<std::string>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.ridge_lambda = j.at("ridge_lambda").get<double>();
        if (m.names.size() != m.weights.size()) throw SchemaError("model weights do not match features");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("model record: ") + e.what());
    }
}

} // namespace alphalogics::model

// Python bindings. Structured results cross the boundary as canonical JSON
// text; the package's Python layer decodes them.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "alphalogics/backtest.hpp"
#include "alphalogics/config.hpp"
#include "alphalogics/dsl.hpp"
#include "alphalogics/error.hpp"
#include "alphalogics/logic.hpp"
#include "alphalogics/panel.hpp"
#include "alphalogics/synth.hpp"

namespace py = pybind11;
namespace al = alphalogics;
using Json = nlohmann::json;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

Array to_numpy(const al::Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

al::Matrix from_numpy(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
    al::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
}

al::Field field_from_name(const std::string& name) {
    for (al::Field f : al::kAllFields)
        if (al::field_name(f) == name) return f;
    throw py::key_error("unknown field " + name);
}

std::vector<std::string> date_strings(const al::Panel& p) {
    std::vector<std::string> out;
    out.reserve(p.num_dates());
    for (al::Date d : p.dates()) out.push_back(d.to_string());
    return out;
}

std::string check_expression(const std::string& expr, const std::string& gamma) {
    const al::logic::CheckReport r = al::logic::check(al::dsl::parse(expr), al::logic::deserialize_gamma(gamma));
    Json v = Json::array();
    for (const auto& x : r.violations)
        v.push_back({{"rule", x.rule}, {"path", x.path}, {"position", x.position}, {"message", x.message}});
    return Json{{"ok", r.ok()}, {"violations", v}}.dump();
}

std::string backtest(const std::string& expr, const al::Panel& panel, const std::string& splits,
                     const std::string& strategy, bool raw, std::size_t horizon, bool final_run) {
    al::backtest::EngineConfig ec;
    ec.strategy = al::config::strategy_from_json(Json::parse(strategy));
    ec.label_horizon = horizon;
    if (raw) {
        ec.include_base_factors = false;
        ec.fit.kind = al::model::ModelKind::Passthrough;
    }
    const al::dsl::FactorExpr e = al::dsl::parse(expr);
    const al::backtest::BacktestEngine engine(panel, al::config::splits_from_json(Json::parse(splits)), ec);
    const al::backtest::SplitReports r = engine.run({e});
    Json out = {{"expression", al::dsl::unparse(e)},
                {"train", al::backtest::to_json(r.train)},
                {"validation", al::backtest::to_json(r.validation)}};
    if (final_run) out["test"] = al::backtest::to_json(engine.run_final({e}, true));
    return out.dump();
}

std::string run(const std::filesystem::path& config_path, std::optional<std::filesystem::path> output_dir,
                std::optional<std::uint64_t> seed, bool resume, bool final_run) {
    al::config::RunConfig c = al::config::load_run_config(config_path);
    if (seed) c.seed = *seed;
    al::config::RunOptions opts;
    opts.resume = resume;
    opts.final_run = final_run;
    opts.output_dir = std::move(output_dir);
    return al::config::summary(al::config::run_pipeline(c, opts)).dump();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "alphalogics native core";

    // Python-side exception hierarchy mirrors the C++ one. Translators run in
    // reverse registration order, so the base goes first.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const nlohmann::json::exception& e) {
            py::set_error(PyExc_ValueError, e.what());
        }
    });
    const auto base = py::register_exception<al::Error>(m, "Error");
    py::register_exception<al::DataError>(m, "DataError", base);
    py::register_exception<al::ParseError>(m, "ParseError", base);
    py::register_exception<al::SchemaError>(m, "SchemaError", base);
    py::register_exception<al::CompileError>(m, "CompileError", base);
    py::register_exception<al::PreconditionError>(m, "PreconditionError", base);
    py::register_exception<al::LeakageError>(m, "LeakageError", base);
    py::register_exception<al::FitError>(m, "FitError", base);
    py::register_exception<al::AgentError>(m, "AgentError", base);

    py::class_<al::Panel>(m, "Panel")
        .def_static(
            "from_csv",
            [](const std::filesystem::path& path, std::size_t min_days) {
                return al::filter_universe(al::ingest_csv(path), min_days);
            },
            py::arg("path"), py::arg("min_days") = 1)
        .def_static(
            "planted",
            [](std::size_t dates, std::size_t instruments, std::uint64_t seed, double strength, double noise) {
                al::synth::PlantedOptions o;
                o.dates = dates;
                o.instruments = instruments;
                o.seed = seed;
                o.strength = strength;
                o.noise = noise;
                return al::synth::planted_panel(o);
            },
            py::arg("dates") = 200, py::arg("instruments") = 60, py::arg("seed") = 7, py::arg("strength") = 0.004,
            py::arg("noise") = 0.02)
        .def("to_csv", [](const al::Panel& p, const std::filesystem::path& path) { al::write_csv(p, path); })
        .def_property_readonly("dates", &date_strings)
        .def_property_readonly("instruments", &al::Panel::instruments)
        .def_property_readonly("shape", [](const al::Panel& p) { return py::make_tuple(p.num_dates(), p.num_instruments()); })
        .def("field", [](const al::Panel& p, const std::string& name) { return to_numpy(p.series(field_from_name(name))); })
        .def("__repr__", [](const al::Panel& p) {
            return "<Panel " + std::to_string(p.num_dates()) + " dates x " + std::to_string(p.num_instruments()) +
                   " instruments>";
        });

    m.def("canonical", [](const std::string& expr) { return al::dsl::unparse(al::dsl::parse(expr)); },
          "Parse an expression and print it back in canonical form.");
    m.def("operators", [](const std::string& expr) { return al::dsl::list_operators(al::dsl::parse(expr)); });
    m.def("variables", [](const std::string& expr) { return al::dsl::list_variables(al::dsl::parse(expr)); });
    m.def("catalogue", [] {
        Json out = Json::array();
        for (const al::dsl::OperatorInfo& op : al::dsl::OperatorCatalogue::instance().entries()) {
            Json families = Json::array();
            for (const auto& form : op.forms) families.push_back(std::string(al::dsl::family_name(form.family)));
            out.push_back({{"name", op.name}, {"families", families}, {"description", op.description}});
        }
        return out.dump();
    });
    m.def("evaluate", [](const std::string& expr, const al::Panel& panel) {
        return to_numpy(al::dsl::evaluate(al::dsl::parse(expr), panel));
    });

    m.def("compile_logic", [](const std::string& h_struct) {
        return al::logic::serialize(al::logic::compile(al::logic::canonicalize_fields(Json::parse(h_struct))));
    });
    m.def("check", &check_expression, py::arg("expression"), py::arg("gamma"));

    m.def("daily_ic", [](const Array& scores, const Array& returns) {
        const al::Matrix s = from_numpy(scores), r = from_numpy(returns);
        if (!s.same_shape(r)) throw py::value_error("scores and returns differ in shape");
        return al::backtest::daily_ic(s, r, {0, s.rows()});
    });
    m.def("max_drawdown", [](const std::vector<double>& equity) { return al::backtest::max_drawdown(equity); });
    m.def("backtest", &backtest, py::arg("expression"), py::arg("panel"), py::arg("splits"), py::arg("strategy"),
          py::arg("raw"), py::arg("horizon"), py::arg("final_run"));
    m.def("run", &run, py::arg("config"), py::arg("output_dir"), py::arg("seed"), py::arg("resume"),
          py::arg("final_run"));
}

#include <pybind11/functional.h>
#include <pybind11/stl.h>

#include <pybind11/pybind11.h>

#include "xprec/analysis.hpp"
#include "xprec/error.hpp"
#include "xprec/evaluator.hpp"
#include "xprec/serialize.hpp"
#include "xprec/synth.hpp"
#include "xprec/trainer.hpp"

namespace py = pybind11;
using namespace xprec;

namespace {

Dataset from_tuples(const std::vector<std::tuple<std::string, std::string, double, std::int64_t>>& rows) {
    std::vector<Rating> rs;
    rs.reserve(rows.size());
    for (const auto& [user, item, value, t] : rows) {
        if (!(value >= 0.0 && value <= 5.0)) throw InvalidArgument("rating out of range [0, 5]");
        Rating r;
        r.user = user;
        r.item = item;
        r.value = value;
        r.raw_value = value;
        r.timestamp = t;
        rs.push_back(std::move(r));
    }
    return Dataset::from_ratings(std::move(rs), 5.0);
}

py::list to_tuples(const Dataset& d) {
    py::list out;
    for (const auto& r : d.ratings()) out.append(py::make_tuple(r.user, r.item, r.value, r.timestamp));
    return out;
}

py::object to_python(const json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

json from_python(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

CostMatrix cost_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InvalidArgument("cost matrix needs at least one level");
    CostMatrix c(static_cast<int>(rows.size()), rows.front().size());
    for (std::size_t e = 0; e < rows.size(); ++e) {
        if (rows[e].size() != rows.front().size()) throw InvalidArgument("ragged cost matrix");
        for (std::size_t t = 0; t < rows[e].size(); ++t) c.at(static_cast<int>(e + 1), t) = rows[e][t];
    }
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Experience-aware latent-factor recommender";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<TrainingFailure>(m, "TrainingFailure", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&from_tuples), py::arg("ratings"),
             "Build from (user, item, rating on 0-5, timestamp) tuples.")
        .def("__len__", &Dataset::size)
        .def_property_readonly("users", &Dataset::users)
        .def_property_readonly("items", &Dataset::items)
        .def("ratings", &to_tuples, "Ratings as tuples, grouped by user in time order.")
        .def("save", [](const Dataset& d, const std::string& path) { write_reviews_file(path, d); });

    m.def(
        "read_reviews",
        [](const std::string& path, double scale_max, const std::string& delimiter) {
            FormatConfig cfg;
            cfg.scale_max = scale_max;
            if (delimiter.size() != 1) throw InvalidArgument("delimiter must be one character");
            cfg.delimiter = delimiter[0];
            return parse_reviews_file(path, cfg).dataset;
        },
        py::arg("path"), py::arg("scale_max") = 5.0, py::arg("delimiter") = "\t");
    m.def("pool_infrequent_users", &pool_infrequent_users, py::arg("dataset"), py::arg("min_ratings") = 50);
    m.def(
        "split",
        [](const Dataset& d, const std::string& scheme, double test_fraction, double valid_fraction,
           std::uint64_t seed) {
            const Split s = split(d, SplitSpec{split_scheme_from_string(scheme), test_fraction, valid_fraction, seed});
            return py::make_tuple(s.train, s.validation, s.test);
        },
        py::arg("dataset"), py::arg("scheme") = "final", py::arg("test_fraction") = 0.1,
        py::arg("valid_fraction") = 0.1, py::arg("seed") = 0, "Returns (train, validation, test).");

    m.def("assign_user_dp", [](const std::vector<std::vector<double>>& c) { return assign_user_dp(cost_matrix(c)); },
          py::arg("costs"), "Cheapest non-decreasing level sequence; costs[e-1][t] is the cost of level e at t.");
    m.def("brute_force_assign",
          [](const std::vector<std::vector<double>>& c) { return brute_force_assign(cost_matrix(c)); },
          py::arg("costs"));
    m.def("benefit_percent", &benefit_percent, py::arg("base_mse"), py::arg("model_mse"));

    py::class_<FittedModel>(m, "Model")
        .def_property_readonly("kind", [](const FittedModel& f) { return to_string(f.kind); })
        .def_property_readonly("levels", [](const FittedModel& f) { return f.params.levels(); })
        .def_property_readonly("factors", [](const FittedModel& f) { return f.params.factors(); })
        .def_readonly("lambda_", &FittedModel::lambda)
        .def_property_readonly("assignment", [](const FittedModel& f) { return f.assignment.by_user(); })
        .def("predict", [](const FittedModel& f, const std::string& user, const std::string& item,
                           int level) { return predict(f.params, level, user, item); },
             py::arg("user"), py::arg("item"), py::arg("level"))
        .def("to_json", [](const FittedModel& f) { return to_python(model_to_json(f)); })
        .def("save", [](const FittedModel& f, const std::string& path) { save_model(path, f); });

    m.def("load_model", &load_model, py::arg("path"), py::arg("train"));

    m.def(
        "fit",
        [](const Dataset& train, const std::optional<Dataset>& valid, const std::string& kind, int levels,
           int factors, std::vector<double> lambdas, int max_outer, std::uint64_t seed, int threads) {
            TrainConfig cfg;
            cfg.kind = model_kind_from_string(kind);
            cfg.levels = levels;
            cfg.factors = factors;
            cfg.lambda_grid = std::move(lambdas);
            cfg.max_outer_iterations = max_outer;
            cfg.seed = seed;
            cfg.threads = threads;
            py::gil_scoped_release release;
            if (valid) return fit(train, *valid, cfg);
            if (cfg.lambda_grid.size() != 1) throw InvalidArgument("a validation set is needed to choose lambda");
            return fit_lambda(train, cfg, cfg.lambda_grid.front());
        },
        py::arg("train"), py::arg("valid") = py::none(), py::arg("kind") = "d", py::arg("E") = 5,
        py::arg("K") = 5, py::arg("lambdas") = std::vector<double>{1.0}, py::arg("max_outer") = 50,
        py::arg("seed") = 0, py::arg("threads") = 1);

    m.def(
        "evaluate",
        [](const FittedModel& f, const Dataset& test, const Dataset& train) {
            return to_python(report_to_json(mse(f, test, train)));
        },
        py::arg("model"), py::arg("test"), py::arg("train"));

    m.def(
        "synth",
        [](const py::object& config) {
            const SynthConfig cfg = config.is_none() ? SynthConfig{} : synth_config_from_json(from_python(config));
            SynthCorpus c = generate(cfg);
            return py::make_tuple(std::move(c.dataset), to_python(truth_to_json(c.truth)));
        },
        py::arg("config") = py::none(), "Returns (dataset, ground-truth dict).");

    m.def(
        "taste_scores",
        [](const FittedModel& f, const Dataset& train, std::size_t min_ratings) {
            py::list out;
            for (const auto& s : acquired_taste_scores(f, train, min_ratings)) {
                py::dict row;
                row["item"] = s.item;
                row["d"] = s.d;
                row["beginner_bias"] = s.beginner_bias;
                row["expert_bias"] = s.expert_bias;
                row["mean_rating"] = s.mean_rating;
                row["n_ratings"] = s.n_ratings;
                out.append(row);
            }
            return out;
        },
        py::arg("model"), py::arg("train"), py::arg("min_ratings") = 50);
}

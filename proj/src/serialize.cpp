#include "xprec/serialize.hpp"

#include <fstream>
#include <ostream>

#include "xprec/error.hpp"

namespace xprec {

namespace {

template <typename T>
T get_field(const json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError(std::string("bad field '") + key + "': " + e.what());
    }
}

json level_to_json(const LevelParams& lp) {
    json j;
    j["alpha"] = lp.alpha;
    j["user_bias"] = lp.user_bias;
    j["item_bias"] = lp.item_bias;
    j["user_factors"] = lp.user_factors;
    j["item_factors"] = lp.item_factors;
    return j;
}

LevelParams level_from_json(const json& j) {
    LevelParams lp;
    lp.alpha = get_field<double>(j, "alpha");
    lp.user_bias = get_field<std::map<std::string, double>>(j, "user_bias");
    lp.item_bias = get_field<std::map<std::string, double>>(j, "item_bias");
    lp.user_factors = get_field<std::map<std::string, std::vector<double>>>(j, "user_factors");
    lp.item_factors = get_field<std::map<std::string, std::vector<double>>>(j, "item_factors");
    return lp;
}

StepKind step_from_string(const std::string& s) {
    if (s == "init") return StepKind::Init;
    if (s == "theta") return StepKind::Theta;
    if (s == "experience") return StepKind::Experience;
    throw DataError("unknown history step '" + s + "'");
}

json params_to_json(const ModelParams& p) {
    json levels = json::array();
    for (int e = 1; e <= p.levels(); ++e) levels.push_back(level_to_json(p.level_params(e)));
    return levels;
}

ModelParams params_from_json(const json& levels, int E, int K) {
    if (!levels.is_array() || levels.size() != static_cast<std::size_t>(E)) {
        throw DataError("expected " + std::to_string(E) + " levels");
    }
    const LevelParams first = level_from_json(levels[0]);
    std::vector<std::string> users, items;
    for (const auto& [u, v] : first.user_bias) users.push_back(u);
    for (const auto& [i, v] : first.item_bias) items.push_back(i);
    ModelParams p(users, items, E, K);
    for (int e = 1; e <= E; ++e) {
        const LevelParams lp = e == 1 ? first : level_from_json(levels[static_cast<std::size_t>(e - 1)]);
        try {
            p.set_level_params(e, lp);
        } catch (const Error& err) {
            throw DataError("level " + std::to_string(e) + ": " + err.what());
        }
    }
    return p;
}

json level_errors(const std::vector<LevelError>& rows) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"level", r.level}, {"count", r.count}, {"mse", r.mse}});
    return out;
}

}  // namespace

json model_to_json(const FittedModel& m) {
    json j;
    j["model_kind"] = to_string(m.kind);
    j["E"] = m.params.levels();
    j["K"] = m.params.factors();
    j["lambda"] = m.lambda;
    j["magnitude"] = m.magnitude;
    j["levels"] = params_to_json(m.params);
    j["assignment"] = m.assignment.by_user();
    json hist = json::array();
    for (const auto& h : m.history) {
        hist.push_back({{"iteration", h.iteration},
                        {"step", to_string(h.step)},
                        {"objective", h.objective},
                        {"error", h.error},
                        {"changed", h.changed}});
    }
    j["train_history"] = std::move(hist);
    json grid = json::array();
    for (const auto& g : m.grid) {
        json row{{"lambda", g.lambda}, {"ok", g.ok}};
        if (g.ok) {
            row["validation_mse"] = g.validation_mse;
            row["train_error"] = g.train_error;
            row["outer_iterations"] = g.outer_iterations;
            row["converged"] = g.converged;
        } else {
            row["failure"] = g.failure;
        }
        grid.push_back(std::move(row));
    }
    j["lambda_grid"] = std::move(grid);
    return j;
}

ModelDocument model_from_json(const json& j) {
    if (!j.is_object()) throw DataError("model document must be a JSON object");
    ModelDocument doc;
    FittedModel& m = doc.model;
    try {
        m.kind = model_kind_from_string(get_field<std::string>(j, "model_kind"));
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }
    const int E = get_field<int>(j, "E");
    const int K = get_field<int>(j, "K");
    if (E < 1 || K < 1) throw DataError("E and K must be >= 1");
    m.lambda = get_field<double>(j, "lambda");
    m.magnitude = j.contains("magnitude") ? get_field<double>(j, "magnitude") : 0.0;
    m.params = params_from_json(j.at("levels"), E, K);
    doc.assignment = get_field<std::map<std::string, std::vector<int>>>(j, "assignment");
    for (const auto& [user, levels] : doc.assignment) {
        for (int l : levels) {
            if (l < 1 || l > E) {
                throw DataError("assignment level " + std::to_string(l) + " for user " + user +
                                " outside 1.." + std::to_string(E));
            }
        }
    }
    if (j.contains("train_history")) {
        for (const auto& h : j.at("train_history")) {
            HistoryEntry e;
            e.iteration = get_field<int>(h, "iteration");
            e.step = step_from_string(get_field<std::string>(h, "step"));
            e.objective = get_field<double>(h, "objective");
            e.error = get_field<double>(h, "error");
            e.changed = get_field<std::size_t>(h, "changed");
            m.history.push_back(e);
        }
    }
    if (j.contains("lambda_grid")) {
        for (const auto& g : j.at("lambda_grid")) {
            LambdaDiagnostics d;
            d.lambda = get_field<double>(g, "lambda");
            d.ok = get_field<bool>(g, "ok");
            if (d.ok) {
                d.validation_mse = get_field<double>(g, "validation_mse");
                d.train_error = get_field<double>(g, "train_error");
                d.outer_iterations = get_field<int>(g, "outer_iterations");
                d.converged = get_field<bool>(g, "converged");
            } else {
                d.failure = get_field<std::string>(g, "failure");
            }
            m.grid.push_back(std::move(d));
        }
    }
    return doc;
}

FittedModel bind_model(ModelDocument doc, const Dataset& train) {
    FittedModel m = std::move(doc.model);
    m.assignment = ExperienceAssignment::from_user_lists(train, doc.assignment);
    return m;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

void save_model(const std::string& path, const FittedModel& m) { write_json_file(path, model_to_json(m)); }

ModelDocument load_model_document(const std::string& path) { return model_from_json(read_json_file(path)); }

FittedModel load_model(const std::string& path, const Dataset& train) {
    return bind_model(load_model_document(path), train);
}

json report_to_json(const EvalReport& r) {
    json j;
    j["mse"] = r.mse;
    j["std_error"] = r.std_error;
    j["clamped_mse"] = r.clamped_mse;
    j["n_test"] = r.n_test;
    j["scheme"] = r.scheme ? json(to_string(*r.scheme)) : json(nullptr);
    j["per_level"] = level_errors(r.per_level);
    j["per_level_train"] = level_errors(r.per_level_train);
    return j;
}

json comparison_to_json(const Comparison& c) {
    json j;
    json rows = json::array();
    for (const auto& row : c.rows) {
        json r = report_to_json(row.report);
        r["name"] = row.name;
        r["model_kind"] = to_string(row.kind);
        rows.push_back(std::move(r));
    }
    j["models"] = std::move(rows);
    j["benefit_d_over_lf"] = c.benefit_d_over_lf ? json(*c.benefit_d_over_lf) : json(nullptr);
    j["benefit_d_over_c"] = c.benefit_d_over_c ? json(*c.benefit_d_over_c) : json(nullptr);
    return j;
}

json split_manifest(const SplitSpec& spec, const Split& s) {
    json j;
    j["scheme"] = to_string(spec.scheme);
    j["test_fraction"] = spec.test_fraction;
    j["validation_fraction"] = spec.validation_fraction;
    j["seed"] = spec.seed;
    j["rows"] = {{"train", s.train.size()}, {"validation", s.validation.size()}, {"test", s.test.size()}};
    return j;
}

json synth_config_to_json(const SynthConfig& c) {
    json j;
    j["n_users"] = c.n_users;
    j["n_items"] = c.n_items;
    j["E"] = c.levels;
    j["K"] = c.factors;
    j["ratings_per_user"] = {c.min_ratings_per_user, c.max_ratings_per_user};
    if (c.noise_by_level.empty()) {
        j["noise_sigma"] = c.noise_sigma;
    } else {
        j["noise_sigma"] = c.noise_by_level;
    }
    j["level_drift"] = c.level_drift;
    if (c.block_drift) {
        const auto& b = *c.block_drift;
        j["block_drift"] = {{"alpha", b.alpha},
                            {"user_bias", b.user_bias},
                            {"item_bias", b.item_bias},
                            {"user_factors", b.user_factors},
                            {"item_factors", b.item_factors}};
    }
    j["bias_sigma"] = c.bias_sigma;
    j["factor_sigma"] = c.factor_sigma;
    j["trajectory_kind"] = to_string(c.trajectory);
    j["leaver_fraction"] = c.leaver_fraction;
    j["start_time"] = c.start_time;
    j["time_span"] = c.time_span;
    j["leaver_gap"] = c.leaver_gap;
    j["seed"] = c.seed;
    return j;
}

SynthConfig synth_config_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("synth config must be a JSON object");
    SynthConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "n_users") c.n_users = v.get<int>();
            else if (key == "n_items") c.n_items = v.get<int>();
            else if (key == "E") c.levels = v.get<int>();
            else if (key == "K") c.factors = v.get<int>();
            else if (key == "ratings_per_user") {
                if (v.is_array()) {
                    const auto r = v.get<std::vector<int>>();
                    if (r.size() != 2) throw InvalidArgument("ratings_per_user must be [min, max]");
                    c.min_ratings_per_user = r[0];
                    c.max_ratings_per_user = r[1];
                } else {
                    c.min_ratings_per_user = c.max_ratings_per_user = v.get<int>();
                }
            } else if (key == "noise_sigma") {
                if (v.is_array()) c.noise_by_level = v.get<std::vector<double>>();
                else c.noise_sigma = v.get<double>();
            } else if (key == "level_drift") c.level_drift = v.get<double>();
            else if (key == "block_drift") {
                BlockDrift b;
                b.alpha = v.value("alpha", 0.0);
                b.user_bias = v.value("user_bias", 0.0);
                b.item_bias = v.value("item_bias", 0.0);
                b.user_factors = v.value("user_factors", 0.0);
                b.item_factors = v.value("item_factors", 0.0);
                c.block_drift = b;
            } else if (key == "bias_sigma") c.bias_sigma = v.get<double>();
            else if (key == "factor_sigma") c.factor_sigma = v.get<double>();
            else if (key == "trajectory_kind") c.trajectory = trajectory_from_string(v.get<std::string>());
            else if (key == "leaver_fraction") c.leaver_fraction = v.get<double>();
            else if (key == "start_time") c.start_time = v.get<std::int64_t>();
            else if (key == "time_span") c.time_span = v.get<std::int64_t>();
            else if (key == "leaver_gap") c.leaver_gap = v.get<std::int64_t>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else throw InvalidArgument("unknown synth config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad synth config: ") + e.what());
    }
    c.validate();
    return c;
}

json truth_to_json(const GroundTruth& t) {
    json j;
    j["E"] = t.params.levels();
    j["K"] = t.params.factors();
    j["true_params"] = params_to_json(t.params);
    j["true_levels"] = t.levels;
    j["rating_items"] = t.items;
    j["leaver_flags"] = t.leavers;
    json traj = json::object();
    for (const auto& [u, k] : t.trajectories) traj[u] = to_string(k);
    j["trajectories"] = std::move(traj);
    j["clamped"] = t.clamped;
    j["n_ratings"] = t.n_ratings;
    return j;
}

GroundTruth truth_from_json(const json& j) {
    GroundTruth t;
    const int E = get_field<int>(j, "E");
    const int K = get_field<int>(j, "K");
    t.params = params_from_json(j.at("true_params"), E, K);
    t.levels = get_field<std::map<std::string, std::vector<int>>>(j, "true_levels");
    t.items = get_field<std::map<std::string, std::vector<std::string>>>(j, "rating_items");
    t.leavers = get_field<std::map<std::string, bool>>(j, "leaver_flags");
    if (j.contains("trajectories")) {
        for (const auto& [u, k] : j.at("trajectories").items()) {
            t.trajectories[u] = trajectory_from_string(k.get<std::string>());
        }
    }
    t.clamped = get_field<std::size_t>(j, "clamped");
    t.n_ratings = get_field<std::size_t>(j, "n_ratings");
    return t;
}

void write_assignment_csv(std::ostream& out, const FittedModel& m, const Dataset& train) {
    if (!m.assignment.matches(train)) throw DataError("model assignment does not match the training set");
    out << "user,item,timestamp,level\n";
    for (std::size_t k = 0; k < train.size(); ++k) {
        const Rating& r = train.ratings()[k];
        out << r.user << ',' << r.item << ',' << r.timestamp << ',' << m.assignment[k] << '\n';
    }
}

}  // namespace xprec

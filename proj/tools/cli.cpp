#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "xprec/analysis.hpp"
#include "xprec/assign.hpp"
#include "xprec/dataset.hpp"
#include "xprec/error.hpp"
#include "xprec/evaluator.hpp"
#include "xprec/format.hpp"
#include "xprec/parallel.hpp"
#include "xprec/serialize.hpp"
#include "xprec/synth.hpp"
#include "xprec/trainer.hpp"

namespace fs = std::filesystem;

namespace xprec::cli {

namespace {

struct Options {
    std::string config;
    int threads = default_threads();

    // ingest
    std::string input, out;
    std::string delimiter = "tab";
    std::string user_col = "user", item_col = "item", rating_col = "rating", time_col = "timestamp";
    double scale_max = 5.0;
    std::size_t min_ratings = 50;

    // split
    std::string scheme = "final";
    double test_fraction = 0.1, valid_fraction = 0.1;
    std::uint64_t seed = 0;
    std::string out_dir;

    // fit
    std::string valid, model_kind = "d";
    int levels = 5, factors = 5;
    std::vector<double> lambdas;
    int max_outer = 50, inner_max = 1000, lbfgs_memory = 10;
    double inner_tol = 1e-6, magnitude = 0.0;
    bool warm_start = false, quiet = false;
    std::string schedule_basis = "time";
    std::string assignments;

    // evaluate / compare / analyze / validate
    std::string model, test, train;
    std::vector<std::string> models, names;
    std::string genres, report_scheme;
    std::size_t min_item_ratings = 50, min_cohort = 5, prefix = 10;
    double window = 0.5, step = 0.1, gap_days = 182;
    int trials = 200, grad_coords = 50;

    // synth
    std::string truth;
    std::optional<std::uint64_t> synth_seed;
};

char parse_delimiter(const std::string& s) {
    if (s == "tab" || s == "\\t" || s == "\t") return '\t';
    if (s == "comma") return ',';
    if (s.size() == 1) return s[0];
    throw InvalidArgument("delimiter must be a single character, 'tab' or 'comma'");
}

std::optional<SplitScheme> scheme_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return split_scheme_from_string(s);
}

Dataset read_processed(const std::string& path) { return parse_reviews_file(path, FormatConfig{}).dataset; }

void add_threads(CLI::App* sub, Options& o) {
    sub->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_config(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "JSON file of flag values; command-line flags override it")
        ->check(CLI::ExistingFile);
}

void build(CLI::App& app, Options& o) {
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    auto* ingest = app.add_subcommand("ingest", "Normalize a raw review file and pool infrequent users");
    ingest->add_option("--input", o.input, "Raw delimited review file with a header")->required();
    ingest->add_option("--out", o.out, "Output TSV (user, item, rating on 0-5, timestamp)")->required();
    ingest->add_option("--delimiter", o.delimiter, "Field delimiter: a character, 'tab' or 'comma'")
        ->capture_default_str();
    ingest->add_option("--user-col", o.user_col, "User column name")->capture_default_str();
    ingest->add_option("--item-col", o.item_col, "Item column name")->capture_default_str();
    ingest->add_option("--rating-col", o.rating_col, "Rating column name")->capture_default_str();
    ingest->add_option("--time-col", o.time_col, "Timestamp column name")->capture_default_str();
    ingest->add_option("--scale-max", o.scale_max, "Top of the raw rating scale")->capture_default_str();
    ingest->add_option("--min-ratings", o.min_ratings,
                       "Users with fewer ratings join the background user (0 disables)")
        ->capture_default_str();
    add_config(ingest, o);
    add_threads(ingest, o);

    auto* split = app.add_subcommand("split", "Per-user train/validation/test split");
    split->add_option("--input", o.input, "Ingested TSV")->required();
    split->add_option("--out-dir", o.out_dir, "Directory for train.tsv, valid.tsv, test.tsv, manifest.json")
        ->required();
    split->add_option("--scheme", o.scheme, "random or final")->capture_default_str();
    split->add_option("--test-fraction", o.test_fraction)->capture_default_str();
    split->add_option("--valid-fraction", o.valid_fraction)->capture_default_str();
    split->add_option("--seed", o.seed)->capture_default_str();
    add_config(split, o);
    add_threads(split, o);

    auto* fit = app.add_subcommand("fit", "Train a model, selecting lambda on the validation set");
    fit->add_option("--input", o.input, "Training TSV")->required();
    fit->add_option("--valid", o.valid, "Validation TSV (optional with a single --lambda)");
    fit->add_option("--model", o.model_kind, "lf, a, b, c or d")
        ->check(CLI::IsMember({"lf", "a", "b", "c", "d"}))
        ->capture_default_str();
    fit->add_option("--E", o.levels, "Experience levels")->capture_default_str();
    fit->add_option("--K", o.factors, "Latent factors")->capture_default_str();
    fit->add_option("--seed", o.seed)->capture_default_str();
    fit->add_option("--lambda", o.lambdas, "Smoothness strengths to try (default 1 10 ... 1e5)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    fit->add_option("--max-outer", o.max_outer, "Maximum coordinate-descent iterations")
        ->capture_default_str();
    fit->add_option("--inner-tol", o.inner_tol, "Relative decrease that stops L-BFGS")
        ->capture_default_str();
    fit->add_option("--inner-max", o.inner_max, "Maximum L-BFGS iterations per step")
        ->capture_default_str();
    fit->add_option("--lbfgs-memory", o.lbfgs_memory)->capture_default_str();
    fit->add_option("--magnitude", o.magnitude, "Optional ||theta||^2 coefficient")->capture_default_str();
    fit->add_flag("--warm-start", o.warm_start, "Start each lambda from the previous solution");
    fit->add_option("--schedule-basis", o.schedule_basis, "Uniform schedules bin on time or count")
        ->check(CLI::IsMember({"time", "count"}))
        ->capture_default_str();
    fit->add_option("--out", o.out, "Model JSON")->required();
    fit->add_option("--assignments", o.assignments, "Also write the assignment CSV here");
    fit->add_flag("--quiet", o.quiet, "Suppress progress lines");
    add_config(fit, o);
    add_threads(fit, o);

    auto* evaluate = app.add_subcommand("evaluate", "Test MSE of a fitted model");
    evaluate->add_option("--model", o.model, "Model JSON")->required();
    evaluate->add_option("--test", o.test, "Test TSV")->required();
    evaluate->add_option("--train", o.train, "Training TSV the model was fitted on")->required();
    evaluate->add_option("--scheme", o.report_scheme, "Split scheme recorded in the report (random or final)");
    evaluate->add_option("--out", o.out, "Report JSON");
    add_config(evaluate, o);
    add_threads(evaluate, o);

    auto* compare = app.add_subcommand("compare", "Side-by-side test MSE and benefit percentages");
    compare->add_option("--models", o.models, "Model JSON files")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    compare->add_option("--names", o.names, "Display names (default: the model kinds)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    compare->add_option("--test", o.test, "Test TSV")->required();
    compare->add_option("--train", o.train, "Training TSV")->required();
    compare->add_option("--scheme", o.report_scheme, "Split scheme recorded in the report");
    compare->add_option("--out", o.out, "Report JSON");
    add_config(compare, o);
    add_threads(compare, o);

    auto* analyze = app.add_subcommand("analyze", "Expert/novice analysis tables as CSV");
    analyze->add_option("--model", o.model, "Model JSON")->required();
    analyze->add_option("--train", o.train, "Training TSV")->required();
    analyze->add_option("--genres", o.genres, "Two-column item/genre TSV");
    analyze->add_option("--out-dir", o.out_dir, "Output directory")->required();
    analyze->add_option("--min-ratings", o.min_item_ratings, "Minimum ratings per scored item")
        ->capture_default_str();
    analyze->add_option("--min-cohort", o.min_cohort, "Minimum cohort size for agreement variance")
        ->capture_default_str();
    analyze->add_option("--window", o.window, "Agreement window width")->capture_default_str();
    analyze->add_option("--step", o.step, "Agreement window step")->capture_default_str();
    analyze->add_option("--gap-days", o.gap_days, "Inactivity that marks a user as having left")
        ->capture_default_str();
    analyze->add_option("--prefix", o.prefix, "Ratings per user in the retention curves")
        ->capture_default_str();
    add_config(analyze, o);
    add_threads(analyze, o);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted levels");
    synth->add_option("--config", o.config, "Synthetic corpus JSON config (defaults when omitted)")
        ->check(CLI::ExistingFile);
    synth->add_option("--seed", o.synth_seed, "Override the config seed");
    synth->add_option("--out", o.out, "Corpus TSV")->required();
    synth->add_option("--truth", o.truth, "Ground-truth JSON")->required();
    add_threads(synth, o);

    auto* validate = app.add_subcommand("validate", "Invariant checks on a model and its training set");
    validate->add_option("--model", o.model, "Model JSON")->required();
    validate->add_option("--train", o.train, "Training TSV")->required();
    validate->add_option("--trials", o.trials, "Random cost matrices for the DP oracle check")
        ->capture_default_str();
    validate->add_option("--grad-coords", o.grad_coords, "Coordinates sampled for the gradient check")
        ->capture_default_str();
    validate->add_option("--seed", o.seed)->capture_default_str();
    add_config(validate, o);
    add_threads(validate, o);
}

// ---------------------------------------------------------------------------

int do_ingest(const Options& o, std::ostream& out) {
    FormatConfig fmt;
    fmt.delimiter = parse_delimiter(o.delimiter);
    fmt.user_column = o.user_col;
    fmt.item_column = o.item_col;
    fmt.rating_column = o.rating_col;
    fmt.timestamp_column = o.time_col;
    fmt.scale_max = o.scale_max;
    ParseResult parsed = parse_reviews_file(o.input, fmt);
    Dataset d = o.min_ratings > 0 ? pool_infrequent_users(parsed.dataset, o.min_ratings) : parsed.dataset;

    std::vector<Rating> normalized = d.ratings();
    for (auto& r : normalized) r.raw_value = r.value;
    d = Dataset::from_ratings(std::move(normalized), 5.0);
    write_reviews_file(o.out, d);

    std::size_t pooled = 0;
    for (const auto& r : d.ratings()) pooled += !r.source_user.empty();
    out << "ratings=" << d.size() << " users=" << d.users().size() << " items=" << d.items().size()
        << " duplicates_dropped=" << parsed.duplicates << " pooled_ratings=" << pooled << '\n';
    return kOk;
}

int do_split(const Options& o, std::ostream& out) {
    SplitSpec spec;
    spec.scheme = split_scheme_from_string(o.scheme);
    spec.test_fraction = o.test_fraction;
    spec.validation_fraction = o.valid_fraction;
    spec.seed = o.seed;
    const Dataset d = read_processed(o.input);
    const Split s = split(d, spec);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    write_reviews_file((dir / "train.tsv").string(), s.train);
    write_reviews_file((dir / "valid.tsv").string(), s.validation);
    write_reviews_file((dir / "test.tsv").string(), s.test);
    write_json_file((dir / "manifest.json").string(), split_manifest(spec, s));
    out << "train=" << s.train.size() << " valid=" << s.validation.size() << " test=" << s.test.size()
        << '\n';
    return kOk;
}

int do_fit(const Options& o, std::ostream& out, std::ostream& err) {
    TrainConfig cfg;
    cfg.kind = model_kind_from_string(o.model_kind);
    cfg.levels = o.levels;
    cfg.factors = o.factors;
    if (!o.lambdas.empty()) cfg.lambda_grid = o.lambdas;
    cfg.max_outer_iterations = o.max_outer;
    cfg.inner_tolerance = o.inner_tol;
    cfg.inner_max_iterations = o.inner_max;
    cfg.lbfgs_memory = o.lbfgs_memory;
    cfg.magnitude = o.magnitude;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.warm_start = o.warm_start;
    cfg.schedule_basis = o.schedule_basis == "count" ? ScheduleBasis::Count : ScheduleBasis::Time;
    if (!o.quiet) cfg.log = [&err](const std::string& line) { err << line << '\n'; };
    cfg.validate();

    const Dataset train = read_processed(o.input);
    FittedModel m;
    if (o.valid.empty()) {
        if (cfg.lambda_grid.size() != 1) {
            throw InvalidArgument("--valid is required unless exactly one --lambda is given");
        }
        try {
            m = fit_lambda(train, cfg, cfg.lambda_grid.front());
        } catch (const DivergenceError& e) {
            throw TrainingFailure(e.what());
        }
    } else {
        const Dataset valid = read_processed(o.valid);
        m = fit(train, valid, cfg);
    }
    save_model(o.out, m);
    if (!o.assignments.empty()) {
        std::ofstream csv(o.assignments);
        if (!csv) throw DataError("cannot write " + o.assignments);
        write_assignment_csv(csv, m, train);
    }
    out << "model=" << to_string(m.kind) << " lambda=" << format_double(m.lambda)
        << " train_error=" << format_double(m.history.back().error) << '\n';
    return kOk;
}

int do_evaluate(const Options& o, std::ostream& out) {
    const Dataset train = read_processed(o.train);
    const Dataset test = read_processed(o.test);
    const FittedModel m = load_model(o.model, train);
    const EvalReport r = mse(m, test, train, scheme_opt(o.report_scheme));
    if (!o.out.empty()) write_json_file(o.out, report_to_json(r));
    out << "mse=" << format_double(r.mse) << " std_error=" << format_double(r.std_error)
        << " n_test=" << r.n_test << '\n';
    return kOk;
}

int do_compare(const Options& o, std::ostream& out) {
    if (!o.names.empty() && o.names.size() != o.models.size()) {
        throw InvalidArgument("--names must give one name per model");
    }
    const Dataset train = read_processed(o.train);
    const Dataset test = read_processed(o.test);
    std::vector<FittedModel> fitted;
    fitted.reserve(o.models.size());
    for (const auto& path : o.models) fitted.push_back(load_model(path, train));
    std::vector<std::pair<std::string, const FittedModel*>> named;
    for (std::size_t k = 0; k < fitted.size(); ++k) {
        named.emplace_back(o.names.empty() ? to_string(fitted[k].kind) : o.names[k], &fitted[k]);
    }
    const Comparison c = compare(named, test, train, scheme_opt(o.report_scheme));
    if (!o.out.empty()) write_json_file(o.out, comparison_to_json(c));

    out << std::left << std::setw(12) << "model" << std::setw(12) << "mse" << "std_error\n";
    for (const auto& row : c.rows) {
        std::ostringstream mse_s, se_s;
        mse_s << std::fixed << std::setprecision(4) << row.report.mse;
        se_s << std::fixed << std::setprecision(4) << row.report.std_error;
        out << std::setw(12) << row.name << std::setw(12) << mse_s.str() << se_s.str() << '\n';
    }
    auto pct = [](double v) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(2) << v << '%';
        return s.str();
    };
    if (c.benefit_d_over_lf) out << "benefit of d over lf: " << pct(*c.benefit_d_over_lf) << '\n';
    if (c.benefit_d_over_c) out << "benefit of d over c: " << pct(*c.benefit_d_over_c) << '\n';
    return kOk;
}

void write_csv(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path.string());
    body(f);
}

int do_analyze(const Options& o, std::ostream& out, std::ostream& err) {
    const Dataset train = read_processed(o.train);
    const FittedModel m = load_model(o.model, train);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);

    if (m.params.levels() >= 2) {
        const auto scores = acquired_taste_scores(m, train, o.min_item_ratings);
        write_csv(dir / "taste_scores.csv", [&](std::ostream& f) { write_taste_scores_csv(f, scores); });
        if (!o.genres.empty()) {
            const auto genres = read_genres_file(o.genres);
            const auto summary = genre_bias_summary(scores, genres);
            write_csv(dir / "genre_summary.csv", [&](std::ostream& f) { write_genre_summary_csv(f, summary); });
        }
    } else {
        err << "warning: single-level model; taste scores skipped\n";
    }

    AgreementOptions ao;
    ao.min_cohort = o.min_cohort;
    ao.window = o.window;
    ao.step = o.step;
    ao.threads = o.threads;
    const auto curve = agreement_variance(m, train, ao);
    if (curve.empty()) err << "warning: no qualifying agreement cohorts\n";
    write_csv(dir / "agreement.csv", [&](std::ostream& f) { write_agreement_csv(f, curve); });

    if (is_learned(m.kind)) {
        const auto prog = progression_stats(m, train);
        write_csv(dir / "progression.csv", [&](std::ostream& f) { write_progression_csv(f, prog); });
    } else {
        err << "warning: progression is fixed by schedule for model " << to_string(m.kind) << "; skipped\n";
    }

    RetentionOptions ro;
    ro.gap = static_cast<std::int64_t>(std::llround(o.gap_days * 86400.0));
    ro.prefix = o.prefix;
    const auto retention = retention_curves(m, train, ro);
    for (const auto& w : retention.warnings) err << "warning: " << w << '\n';
    write_csv(dir / "retention.csv", [&](std::ostream& f) { write_retention_csv(f, retention); });

    const auto means = level_rating_means(m, train);
    write_csv(dir / "level_means.csv", [&](std::ostream& f) { write_level_means_csv(f, means); });
    out << "wrote analysis tables to " << dir.string() << '\n';
    return kOk;
}

int do_synth(const Options& o, std::ostream& out) {
    SynthConfig cfg = o.config.empty() ? SynthConfig{} : synth_config_from_json(read_json_file(o.config));
    if (o.synth_seed) cfg.seed = *o.synth_seed;
    const SynthCorpus corpus = generate(cfg);
    write_reviews_file(o.out, corpus.dataset);
    write_json_file(o.truth, truth_to_json(corpus.truth));
    out << "ratings=" << corpus.dataset.size() << " users=" << corpus.dataset.users().size()
        << " clamp_rate=" << format_double(corpus.truth.clamp_rate()) << '\n';
    return kOk;
}

struct CheckRow {
    std::string name;
    bool ok;
    std::string detail;
};

int do_validate(const Options& o, std::ostream& out, std::ostream& err) {
    const Dataset train = read_processed(o.train);
    const FittedModel m = load_model(o.model, train);
    const int E = m.params.levels();
    std::vector<CheckRow> rows;

    // 1. monotonicity of the stored assignment
    const auto violation = check_monotone(m.kind, m.assignment, train, E);
    rows.push_back({"monotonicity", !violation, violation ? violation->message : "ok"});

    // 2. DP against exhaustive search
    {
        std::mt19937_64 rng(o.seed);
        std::uniform_real_distribution<double> cost(0.0, 1.0);
        std::size_t mismatches = 0, checked = 0;
        auto check = [&](const CostMatrix& c) {
            ++checked;
            if (assign_user_dp(c) != brute_force_assign(c)) ++mismatches;
        };
        for (int t = 0; t < o.trials; ++t) {
            const int levels = std::uniform_int_distribution<int>(1, 4)(rng);
            const auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 8)(rng));
            CostMatrix c(levels, n);
            for (int e = 1; e <= levels; ++e) {
                for (std::size_t j = 0; j < n; ++j) c.at(e, j) = std::round(cost(rng) * 4.0) / 4.0;
            }
            check(c);
        }
        // cost matrices of the model's own users, truncated to the oracle bound
        if (E <= 5) {
            for (std::size_t u = 0; u < train.users().size() && u < 200; ++u) {
                const std::size_t n = std::min<std::size_t>(train.user_count(u), 12);
                CostMatrix c(E, n);
                for (std::size_t j = 0; j < n; ++j) {
                    const Rating& r = train.ratings()[train.user_begin(u) + j];
                    for (int e = 1; e <= E; ++e) {
                        const double d = predict(m.params, e, r.user, r.item) - r.value;
                        c.at(e, j) = d * d;
                    }
                }
                check(c);
            }
        }
        rows.push_back({"dp_oracle", mismatches == 0,
                        std::to_string(checked - mismatches) + "/" + std::to_string(checked) + " agree"});
    }

    // 3. analytic gradient against central differences
    {
        TrainingObjective obj(m.params, train, m.assignment, m.lambda, m.magnitude, o.threads);
        std::vector<double> x(m.params.theta().begin(), m.params.theta().end());
        std::vector<double> g(x.size());
        obj.value_and_gradient(x, g);
        std::mt19937_64 rng(o.seed + 1);
        std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
        double worst = 0.0;
        std::size_t bad = 0;
        const double h = 1e-5;
        for (int t = 0; t < o.grad_coords; ++t) {
            const std::size_t j = pick(rng);
            const double keep = x[j];
            x[j] = keep + h;
            const double up = obj.value(x);
            x[j] = keep - h;
            const double down = obj.value(x);
            x[j] = keep;
            const double fd = (up - down) / (2 * h);
            const double scale = std::max(std::abs(g[j]), std::abs(fd));
            if (scale <= 1e-8) continue;
            const double rel = std::abs(g[j] - fd) / scale;
            worst = std::max(worst, rel);
            // tiny components are dominated by finite-difference rounding
            if (rel >= 1e-4 && std::abs(g[j] - fd) > 1e-7) ++bad;
        }
        rows.push_back({"gradient", bad == 0, "max relative error " + format_double(worst)});
    }

    bool all = true;
    out << std::left << std::setw(14) << "check" << std::setw(8) << "result" << "detail\n";
    for (const auto& r : rows) {
        out << std::setw(14) << r.name << std::setw(8) << (r.ok ? "PASS" : "FAIL") << r.detail << '\n';
        all = all && r.ok;
    }
    if (violation) err << violation->message << '\n';
    return all ? kOk : kData;
}

// Turns a JSON object of flag values into command-line tokens, skipping flags
// already present on the command line.
std::vector<std::string> config_tokens(const std::string& path, CLI::App* sub) {
    const json j = read_json_file(path);
    if (!j.is_object()) throw InvalidArgument("config file must hold a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option(flag);
        } catch (const CLI::OptionNotFound&) {
            throw InvalidArgument("unknown config key '" + key + "' for " + sub->get_name());
        }
        if (flag == "--config" || opt->count() > 0) continue;
        auto scalar = [](const json& v) {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number_float()) return format_double(v.get<double>());
            return v.dump();
        };
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back(flag);
        } else if (value.is_array()) {
            tokens.push_back(flag);
            for (const auto& v : value) tokens.push_back(scalar(v));
        } else {
            tokens.push_back(flag);
            tokens.push_back(scalar(value));
        }
    }
    return tokens;
}

void parse(CLI::App& app, std::vector<std::string> args) {
    std::reverse(args.begin(), args.end());
    app.parse(args);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Experience-aware latent-factor recommender"};
    app.name("xprec");
    app.failure_message(CLI::FailureMessage::help);
    Options o;
    build(app, o);
    try {
        parse(app, args);
        CLI::App* sub = app.get_subcommands().front();
        if (!o.config.empty() && sub->get_name() != "synth") {
            std::vector<std::string> merged{sub->get_name()};
            const auto extra = config_tokens(o.config, sub);
            merged.insert(merged.end(), extra.begin(), extra.end());
            merged.insert(merged.end(), args.begin() + 1, args.end());
            app.clear();
            o = Options{};
            parse(app, merged);
            sub = app.get_subcommands().front();
        }
        const std::string name = sub->get_name();
        if (name == "ingest") return do_ingest(o, out);
        if (name == "split") return do_split(o, out);
        if (name == "fit") return do_fit(o, out, err);
        if (name == "evaluate") return do_evaluate(o, out);
        if (name == "compare") return do_compare(o, out);
        if (name == "analyze") return do_analyze(o, out, err);
        if (name == "synth") return do_synth(o, out);
        if (name == "validate") return do_validate(o, out, err);
        return kUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const TrainingFailure& e) {
        err << "error: " << e.what() << '\n';
        return kTraining;
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kTraining;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace xprec::cli

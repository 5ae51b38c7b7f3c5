#include "meal/cli.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "meal/ensemble.hpp"
#include "meal/io.hpp"
#include "meal/metrics.hpp"
#include "meal/selectors.hpp"
#include "meal/surface.hpp"

namespace meal {
namespace {

namespace fs = std::filesystem;

struct SelectArgs {
    std::string pool;
    std::string algo;
    std::uint64_t seed = 0;
    std::optional<std::size_t> budget;
    std::string out;
    std::size_t cal_m = default_cal_neighbors;
    std::size_t ipusd_k = 8;
    std::size_t ipusd_iters = 1000;
    std::size_t threads = 1;
};

struct BenchArgs {
    std::string pool;
    std::vector<std::string> algos;
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::string rank_metric = "diversity";
    std::optional<std::size_t> budget;
    std::size_t cal_m = default_cal_neighbors;
    std::size_t ipusd_k = 8;
    std::size_t ipusd_iters = 1000;
    std::size_t repr_k = default_representativeness_k;
    std::size_t threads = 1;
};

struct EnsembleArgs {
    std::string mode;
    std::vector<std::string> inputs;
    std::string out;
    std::vector<std::string> exclude;
};

struct SurfaceArgs {
    std::string theta_p, theta_f, theta_s;
    std::string emit_dir;
    std::string assemble_csv;
    std::string out;
    std::size_t a_count = default_grid_count;
    std::size_t b_count = default_grid_count;
    std::vector<double> a_range{-0.5, 1.5};
    std::vector<double> b_range{-0.5, 1.5};
};

SelectorConfig selector_config(std::optional<std::size_t> budget, std::uint64_t seed,
                               std::size_t cal_m, std::size_t ipusd_k, std::size_t ipusd_iters,
                               std::size_t threads) {
    SelectorConfig cfg;
    cfg.budget = budget;
    cfg.seed = seed;
    cfg.cal_m = cal_m;
    cfg.ipusd_clusters = ipusd_k;
    cfg.ipusd_iterations = ipusd_iters;
    cfg.threads = threads;
    return cfg;
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("NA");
}

int cmd_select(const SelectArgs& args, std::ostream& out) {
    const Algorithm algo = parse_algorithm(args.algo);
    const auto start = std::chrono::steady_clock::now();
    const PoolDataset pool = read_pool(args.pool);
    const SelectorConfig cfg = selector_config(args.budget, is_seeded(algo) ? args.seed : 0,
                                               args.cal_m, args.ipusd_k, args.ipusd_iters,
                                               args.threads);
    const Selection selection = select(pool, algo, cfg);
    write_selection(make_selection_record(selection, pool), args.out);
    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;

    out << "select\talgorithm=" << to_string(algo) << "\tbudget=" << selection.indices.size()
        << "\tseed=" << selection.seed << "\telapsed_ms=" << format_double(elapsed.count())
        << "\tscore=" << optional_number(selection.score) << "\n";
    return exit_ok;
}

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
    if (args.algos.empty()) {
        err << "bench: --algos must name at least one algorithm\n";
        return exit_usage;
    }
    std::vector<Algorithm> algos;
    for (const std::string& tag : args.algos) algos.push_back(parse_algorithm(tag));
    const std::vector<std::uint64_t> seeds =
        args.seeds.empty() ? std::vector<std::uint64_t>{0} : args.seeds;
    if (args.rank_metric != "diversity" && args.rank_metric != "representativeness" &&
        args.rank_metric != "label_entropy") {
        err << "bench: --rank-metric must be diversity, representativeness or label_entropy\n";
        return exit_usage;
    }

    const PoolDataset pool = read_pool(args.pool);
    if (args.rank_metric == "label_entropy" && !pool.gold_labels) {
        throw Error(ErrorCode::precondition, "bench: ranking by label entropy needs gold labels");
    }
    fs::create_directories(args.out);

    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    RankTable table;
    table.datasets = {"pool"};
    table.values.emplace_back();
    table.higher_is_better = args.rank_metric != "label_entropy";

    struct Row {
        Algorithm algo;
        std::size_t runs;
        MetricSummary div, rep;
        std::optional<MetricSummary> ent;
    };
    std::vector<Row> rows;

    for (Algorithm algo : algos) {
        const std::vector<std::uint64_t> algo_seeds =
            is_seeded(algo) ? seeds : std::vector<std::uint64_t>{0};
        std::vector<double> div, rep, ent;
        for (std::uint64_t seed : algo_seeds) {
            const SelectorConfig cfg = selector_config(args.budget, seed, args.cal_m, args.ipusd_k,
                                                       args.ipusd_iters, args.threads);
            const Selection selection = select(pool, algo, cfg);
            write_selection(make_selection_record(selection, pool),
                            fs::path(args.out) / (std::string(to_string(algo)) + "_seed" +
                                                  std::to_string(seed) + ".json"));
            const MetricsReport report = evaluate_selection(pool, selection, args.repr_k);
            runs.push_back(metrics_report_json(report));
            div.push_back(report.diversity);
            rep.push_back(report.representativeness);
            if (report.label_entropy) ent.push_back(*report.label_entropy);
        }
        Row row{algo, algo_seeds.size(), summarize(div), summarize(rep), std::nullopt};
        if (!ent.empty()) row.ent = summarize(ent);
        rows.push_back(row);

        table.algorithms.emplace_back(to_string(algo));
        const double key = args.rank_metric == "diversity"            ? row.div.mean
                           : args.rank_metric == "representativeness" ? row.rep.mean
                                                                      : row.ent->mean;
        table.values.front().push_back(key);
    }
    const std::vector<double> ranks = rank_algorithms(table);

    auto summary_json = [](const MetricSummary& s) {
        nlohmann::ordered_json j;
        j["mean"] = s.mean;
        if (s.stdev) {
            j["stdev"] = *s.stdev;
        } else {
            j["stdev"] = nullptr;
        }
        return j;
    };
    out << "bench\talgorithm\truns\tdiversity_mean\tdiversity_stdev\trepresentativeness_mean"
           "\trepresentativeness_stdev\tlabel_entropy_x100_mean\tlabel_entropy_x100_stdev\trank\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        nlohmann::ordered_json entry;
        entry["algorithm"] = std::string(to_string(row.algo));
        entry["runs"] = row.runs;
        entry["diversity"] = summary_json(row.div);
        entry["representativeness"] = summary_json(row.rep);
        if (row.ent) {
            entry["label_entropy_nats"] = summary_json(*row.ent);
        } else {
            entry["label_entropy_nats"] = nullptr;
        }
        entry["rank"] = ranks[r];
        summary.push_back(std::move(entry));

        auto x100 = [](const std::optional<double>& v) {
            return v ? std::optional<double>(*v * 100.0) : std::nullopt;
        };
        out << "bench\t" << to_string(row.algo) << '\t' << row.runs << '\t'
            << format_double(row.div.mean) << '\t' << optional_number(row.div.stdev) << '\t'
            << format_double(row.rep.mean) << '\t' << optional_number(row.rep.stdev) << '\t'
            << optional_number(row.ent ? x100(row.ent->mean) : std::nullopt) << '\t'
            << optional_number(row.ent ? x100(row.ent->stdev) : std::nullopt) << '\t'
            << format_double(ranks[r]) << '\n';
    }

    nlohmann::ordered_json report;
    report["rank_metric"] = args.rank_metric;
    report["representativeness_k"] = args.repr_k;
    report["runs"] = std::move(runs);
    report["summary"] = std::move(summary);
    write_file_atomic(fs::path(args.out) / "report.json", report.dump(2) + "\n");
    return exit_ok;
}

int cmd_ensemble(const EnsembleArgs& args, std::ostream& out) {
    if (args.mode == "pred") {
        RunLogits runs;
        for (const std::string& path : args.inputs) {
            runs.runs.push_back(tensor3_from(read_tensors(path), "logits"));
        }
        const Matrix probs = ensemble_pred(runs);
        write_tensors(NamedTensorSet{{tensor_from_matrix("probs", probs)}}, args.out);
    } else {
        std::vector<NamedTensorSet> checkpoints;
        for (const std::string& path : args.inputs) checkpoints.push_back(read_tensors(path));
        write_tensors(ensemble_para(checkpoints, args.exclude), args.out);
    }
    out << "ensemble\tmode=" << args.mode << "\tinputs=" << args.inputs.size() << "\tout="
        << args.out << "\n";
    return exit_ok;
}

int cmd_surface(const SurfaceArgs& args, std::ostream& out, std::ostream& err) {
    if (!args.assemble_csv.empty()) {
        if (args.out.empty()) {
            err << "surface: --assemble needs --out\n";
            return exit_usage;
        }
        const std::vector<SurfaceSample> samples = parse_surface_csv(read_file(args.assemble_csv));
        const SurfaceGrid grid = assemble_grid(samples);
        write_file_atomic(args.out, grid_to_csv(grid));
        out << "surface\tmode=assemble\ta_values=" << grid.a_values.size()
            << "\tb_values=" << grid.b_values.size() << "\tout=" << args.out << "\n";
        return exit_ok;
    }
    if (args.theta_p.empty() || args.theta_f.empty() || args.theta_s.empty() ||
        args.emit_dir.empty()) {
        err << "surface: emit mode needs --theta-p, --theta-f, --theta-s and --emit-checkpoints\n";
        return exit_usage;
    }
    if (args.a_range.size() != 2 || args.b_range.size() != 2) {
        err << "surface: ranges take exactly two values\n";
        return exit_usage;
    }
    const NamedTensorSet p = read_tensors(args.theta_p);
    const NamedTensorSet f = read_tensors(args.theta_f);
    const NamedTensorSet s = read_tensors(args.theta_s);
    const auto points = grid_points(args.a_count, args.b_count, {args.a_range[0], args.a_range[1]},
                                    {args.b_range[0], args.b_range[1]});
    fs::create_directories(args.emit_dir);
    std::string coords = "a_index,b_index,a,b,checkpoint\n";
    for (const GridPoint& pt : points) {
        const std::string file = grid_checkpoint_name(pt.a_index, pt.b_index) + ".tensors";
        write_tensors(interpolate(p, f, s, pt.a, pt.b), fs::path(args.emit_dir) / file);
        coords += std::to_string(pt.a_index) + "," + std::to_string(pt.b_index) + "," +
                  format_double(pt.a) + "," + format_double(pt.b) + "," + file + "\n";
    }
    write_file_atomic(fs::path(args.emit_dir) / "coordinates.csv", coords);
    out << "surface\tmode=emit\tcheckpoints=" << points.size() << "\tdir=" << args.emit_dir
        << "\n";
    return exit_ok;
}

}  // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return exit_usage;
        case ErrorCode::precondition: return exit_precondition;
        default: return exit_format;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Few-shot training-set selection, ensembling and surface tools", "meal"};
    app.set_config("--config", "", "Read option defaults from a key=value (TOML-style) file");
    app.require_subcommand(1, 1);

    SelectArgs sel;
    CLI::App* select_cmd = app.add_subcommand("select", "Select a training set from a pool");
    select_cmd->add_option("--pool", sel.pool, "Pool file")->required();
    select_cmd->add_option("--algo", sel.algo, "random|entropy|lc|bt|ppkl|cal|badge|ipusd")->required();
    select_cmd->add_option("--seed", sel.seed, "Seed (default: $MEAL_SEED or 0)")->envname("MEAL_SEED");
    select_cmd->add_option("--budget", sel.budget, "Selection size (default 16 * labels)");
    select_cmd->add_option("--out", sel.out, "Selection JSON output")->required();
    select_cmd->add_option("--cal-m", sel.cal_m, "CAL neighbours")->check(CLI::PositiveNumber);
    select_cmd->add_option("--ipusd-k", sel.ipusd_k, "IPUSD clusters")->check(CLI::PositiveNumber);
    select_cmd->add_option("--ipusd-iters", sel.ipusd_iters, "IPUSD iterations")->check(CLI::PositiveNumber);
    select_cmd->add_option("--threads", sel.threads, "IPUSD worker threads (0 = all cores)");

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("bench", "Run several selectors and score them");
    bench_cmd->add_option("--pool", bench.pool, "Pool file")->required();
    bench_cmd->add_option("--algos", bench.algos, "Comma-separated algorithms")->required()->delimiter(',');
    bench_cmd->add_option("--seeds", bench.seeds, "Comma-separated seeds")->delimiter(',')->envname("MEAL_SEED");
    bench_cmd->add_option("--out", bench.out, "Output directory")->required();
    bench_cmd->add_option("--rank-metric", bench.rank_metric, "diversity|representativeness|label_entropy");
    bench_cmd->add_option("--budget", bench.budget, "Selection size (default 16 * labels)");
    bench_cmd->add_option("--cal-m", bench.cal_m, "CAL neighbours")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--ipusd-k", bench.ipusd_k, "IPUSD clusters")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--ipusd-iters", bench.ipusd_iters, "IPUSD iterations")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--repr-k", bench.repr_k, "Representativeness neighbours")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--threads", bench.threads, "IPUSD worker threads (0 = all cores)");

    EnsembleArgs ens;
    CLI::App* ens_cmd = app.add_subcommand("ensemble", "Ensemble run predictions or parameters");
    ens_cmd->add_option("--mode", ens.mode, "pred|para")->required()->check(CLI::IsMember({"pred", "para"}));
    ens_cmd->add_option("--inputs", ens.inputs, "Tensor files")->required();
    ens_cmd->add_option("--out", ens.out, "Output tensor file")->required();
    ens_cmd->add_option("--exclude-pattern", ens.exclude, "Glob of tensor names kept from the first checkpoint");

    SurfaceArgs surf;
    CLI::App* surf_cmd = app.add_subcommand("surface", "Emit interpolated checkpoints or assemble a surface grid");
    surf_cmd->add_option("--theta-p", surf.theta_p, "Anchor checkpoint (a=0, b=0)");
    surf_cmd->add_option("--theta-f", surf.theta_f, "Checkpoint at a=1");
    surf_cmd->add_option("--theta-s", surf.theta_s, "Checkpoint at b=1");
    auto* emit_opt = surf_cmd->add_option("--emit-checkpoints", surf.emit_dir, "Directory for grid checkpoints");
    auto* assemble_opt = surf_cmd->add_option("--assemble", surf.assemble_csv, "CSV with a,b,value columns");
    emit_opt->excludes(assemble_opt);
    surf_cmd->add_option("--out", surf.out, "Grid CSV output (assemble mode)");
    surf_cmd->add_option("--a-count", surf.a_count, "Grid points along a")->check(CLI::Range(2, 1 << 20));
    surf_cmd->add_option("--b-count", surf.b_count, "Grid points along b")->check(CLI::Range(2, 1 << 20));
    surf_cmd->add_option("--a-range", surf.a_range, "lo hi")->expected(2);
    surf_cmd->add_option("--b-range", surf.b_range, "lo hi")->expected(2);

    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (select_cmd->parsed()) return cmd_select(sel, out);
        if (bench_cmd->parsed()) return cmd_bench(bench, out, err);
        if (ens_cmd->parsed()) return cmd_ensemble(ens, out);
        if (surf_cmd->parsed()) return cmd_surface(surf, out, err);
    } catch (const Error& e) {
        err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error[io_failure]: " << e.what() << "\n";
        return exit_format;
    }
    return exit_usage;
}

}  // namespace meal

// sanlab: train, sweep and inspect sparsely activated networks from the
// command line. See README.md for the file formats and examples.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sanlab/datasets.hpp"
#include "sanlab/probe.hpp"
#include "sanlab/serialize.hpp"
#include "sanlab/svg.hpp"
#include "sanlab/sweep.hpp"
#include "sanlab/train.hpp"

namespace fs = std::filesystem;
using namespace sanlab;

namespace {

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(std::int64_t flag_seed) {
    if (flag_seed >= 0) return static_cast<std::uint64_t>(flag_seed);
    if (const char* env = std::getenv("SANLAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw usage_error("SANLAB_SEED is not a number: " +
                              std::string(env));
        }
    }
    return 0;
}

// Accepts "1,2,3", "15..22" and "15..22:2".
std::vector<std::size_t> parse_kernel_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const std::size_t dots = item.find("..");
        if (dots == std::string::npos) {
            sizes.push_back(std::stoull(item));
            continue;
        }
        const std::size_t colon = item.find(':', dots);
        const std::size_t lo = std::stoull(item.substr(0, dots));
        const std::size_t hi = std::stoull(
            item.substr(dots + 2, colon == std::string::npos
                                      ? std::string::npos
                                      : colon - dots - 2));
        const std::size_t stride =
            colon == std::string::npos ? 1 : std::stoull(item.substr(colon + 1));
        if (stride == 0 || hi < lo)
            throw usage_error("bad kernel size range: " + item);
        for (std::size_t m = lo; m <= hi; m += stride) sizes.push_back(m);
    }
    for (std::size_t m : sizes)
        if (m < 1) throw usage_error("kernel sizes must be >= 1");
    return sizes;
}

std::vector<ActivationKind> parse_activations(
    const std::vector<std::string>& names) {
    std::vector<ActivationKind> kinds;
    for (const std::string& name : names) {
        const auto kind = parse_activation(name);
        if (!kind)
            throw usage_error(
                "unknown activation '" + name +
                "' (expected Identity, Relu, TopKAbsolutes, "
                "ExtremaPoolIndices or Extrema)");
        kinds.push_back(*kind);
    }
    return kinds;
}

// UCI-style labeled rows: 178 sample columns plus a trailing integer label;
// an optional leading non-numeric id column and header line are skipped.
void load_labeled_rows(const std::string& path,
                       std::vector<std::vector<double>>& rows,
                       std::vector<int>& labels) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open labeled CSV: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 2) continue;
        std::size_t first = 0;
        try {
            parse_token_as_double(fields[0]);
        } catch (const parse_error&) {
            first = 1; // id column or header
        }
        if (first == 1 && fields.size() >= 2) {
            try {
                parse_token_as_double(fields[1]);
            } catch (const parse_error&) {
                continue; // header line
            }
        }
        std::vector<double> row;
        row.reserve(fields.size() - first - 1);
        try {
            for (std::size_t i = first; i + 1 < fields.size(); ++i)
                row.push_back(parse_token_as_double(fields[i]));
            labels.push_back(static_cast<int>(
                parse_token_as_double(fields.back())));
        } catch (const parse_error&) {
            throw parse_error(path + ":" + std::to_string(line_no) +
                              ": unparsable row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error(path + ": no data rows");
}

struct DataOptions {
    std::string path;
    std::string format = "physionet-csv"; // physionet-csv | uci-csv | idx-dir
    std::uint64_t seed = 0;
    std::size_t val_count = 10000; // idx-dir: train-file images held out
};

struct ResolvedData {
    SignalCorpus signals;   // valid when is_images == false
    ImageCorpus images;     // valid when is_images == true
    bool is_images = false;

    std::vector<Tensor> examples_of(Split s) const {
        if (!is_images) return signals.examples_of(s);
        std::vector<Tensor> out;
        for (std::size_t i = 0; i < images.split.size(); ++i)
            if (images.split[i] == s) out.push_back(images.images[i]);
        return out;
    }
    std::string label() const {
        return is_images ? images.provenance : signals.provenance;
    }
};

ResolvedData resolve_data(const DataOptions& opts) {
    ResolvedData data;
    if (opts.format == "physionet-csv") {
        const Tensor signal = load_csv_signal(opts.path);
        data.signals =
            physionet_protocol(signal, fs::path(opts.path).stem().string());
        for (const std::string& note : data.signals.notes)
            std::cerr << "note: " << note << "\n";
    } else if (opts.format == "uci-csv") {
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        load_labeled_rows(opts.path, rows, labels);
        data.signals = uci_protocol(rows, labels, opts.seed);
    } else if (opts.format == "idx-dir") {
        data.images = mnist_protocol(
            load_idx_images(opts.path + "/train-images-idx3-ubyte",
                            opts.path + "/train-labels-idx1-ubyte"),
            load_idx_images(opts.path + "/t10k-images-idx3-ubyte",
                            opts.path + "/t10k-labels-idx1-ubyte"),
            opts.val_count);
        data.images.provenance = fs::path(opts.path).filename().string();
        data.is_images = true;
    } else {
        throw usage_error("unknown --format '" + opts.format + "'");
    }
    return data;
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    throw usage_error("unknown split '" + name +
                      "' (expected train, validation or test)");
}

void write_series_csv(const std::string& path, const Tensor& t) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    if (t.rank() == 1) {
        for (std::size_t i = 0; i < t.size(); ++i)
            out << format_full(t[i]) << "\n";
        return;
    }
    for (std::size_t r = 0; r < t.extent(0); ++r) {
        for (std::size_t c = 0; c < t.extent(1); ++c) {
            if (c) out << ",";
            out << format_full(t.at(r, c));
        }
        out << "\n";
    }
}

void write_reconstruction_svg(const std::string& path, const Tensor& x,
                              const ForwardTrace& trace) {
    const std::size_t q = trace.alpha.size();
    if (x.rank() == 1) {
        const double panel_w = 640, panel_h = 110, pad = 14;
        const std::size_t panels = 1 + q;
        svg::Document doc(panel_w + 2 * pad,
                          pad + panels * (panel_h + pad) + 14);
        double y0 = pad;
        {
            auto [lo, hi] = svg::value_range({&x.values(), &trace.xhat.values()});
            svg::Panel panel{pad, y0, panel_w, panel_h, lo, hi, x.size()};
            svg::draw_series(doc, panel, x.values(), "#1f77b4", 1.2, 0.8);
            svg::draw_series(doc, panel, trace.xhat.values(), "#d62728", 1.2);
            doc.text(pad, y0 + panel_h + 11, "x (blue) and xhat (red)", 10);
            y0 += panel_h + pad;
        }
        for (std::size_t i = 0; i < q; ++i) {
            auto [lo, hi] =
                svg::value_range({&trace.s[i].values(), &trace.r[i].values()});
            svg::Panel panel{pad, y0, panel_w, panel_h, lo, hi, x.size()};
            svg::draw_series(doc, panel, trace.s[i].values(), "#2ca02c", 1.0,
                             0.5);
            svg::draw_stems(doc, panel, trace.alpha[i].values(), "#17becf");
            svg::draw_series(doc, panel, trace.r[i].values(), "#d62728", 1.0,
                             0.9);
            doc.text(pad, y0 + panel_h + 11,
                     "kernel " + std::to_string(i) +
                         ": s (green), alpha (stems), r (red)",
                     10);
            y0 += panel_h + pad;
        }
        doc.save(path);
        return;
    }
    // rank 2: gray heatmaps for x, per-kernel alpha and r, and xhat
    const double cell = 140, pad = 14;
    const std::size_t cols = 2 + 2 * q;
    svg::Document doc(pad + cols * (cell + pad), cell + 2 * pad + 14);
    double x0 = pad;
    auto panel = [&](const Tensor& t, const std::string& title) {
        svg::draw_heatmap(doc, x0, pad, cell, cell, t);
        doc.text(x0, pad + cell + 12, title, 10);
        x0 += cell + pad;
    };
    panel(x, "x");
    for (std::size_t i = 0; i < q; ++i) {
        panel(trace.alpha[i], "alpha " + std::to_string(i));
        panel(trace.r[i], "r " + std::to_string(i));
    }
    panel(trace.xhat, "xhat");
    doc.save(path);
}

int cmd_sweep(const DataOptions& data_opts, SweepSpec spec) {
    ResolvedData data = resolve_data(data_opts);
    if (data.is_images)
        throw usage_error("sweep expects a 1D corpus (physionet-csv/uci-csv)");
    spec.corpus = std::move(data.signals);
    if (spec.dataset_label.empty()) spec.dataset_label = spec.corpus.provenance;
    const auto cells = run_sweep(spec);
    for (const SweepCell& cell : cells) {
        if (!cell.selected) continue;
        std::cout << to_string(cell.kind) << ": m=" << cell.m
                  << " epoch=" << cell.epoch
                  << " test cr_inv=" << format_full(cell.test.mean_cr_inv)
                  << " l_tilde=" << format_full(cell.test.mean_l_tilde)
                  << " phi_bar=" << format_full(cell.test.phi_bar) << "\n";
    }
    std::cout << "report: " << spec.out_dir << "/report.csv\n";
    return 0;
}

int cmd_train(const DataOptions& data_opts, ActivationKind kind,
              std::size_t kernel_size, std::size_t q, const TrainConfig& cfg,
              const std::string& out_dir) {
    const ResolvedData data = resolve_data(data_opts);
    const std::vector<Tensor> train_set = data.examples_of(Split::train);
    const std::vector<Tensor> val_set = data.examples_of(Split::validation);
    if (train_set.empty() || val_set.empty())
        throw std::runtime_error("corpus lacks train or validation examples");
    SanModel init = make_san(q, kernel_size, kind, train_set.front().extents(),
                             cfg.border_tol, cfg.init_mean, cfg.init_std,
                             mix_seed(cfg.seed, 0x5eed));
    const TrainResult result = train(init, train_set, val_set, cfg);

    fs::create_directories(out_dir);
    save_model(result.best_model, out_dir + "/model.txt");
    std::ofstream history(out_dir + "/history.csv");
    history << "epoch,train_loss,val_phi_bar,val_cr_inv,val_l_tilde\n";
    for (const EpochStats& e : result.history)
        history << e.epoch << "," << format_full(e.train_loss) << ","
                << format_full(e.validation.phi_bar) << ","
                << format_full(e.validation.mean_cr_inv) << ","
                << format_full(e.validation.mean_l_tilde) << "\n";
    const PhiAggregate& best = result.history[result.best_epoch - 1].validation;
    std::cout << "best epoch " << result.best_epoch
              << " validation phi_bar=" << format_full(best.phi_bar) << "\n"
              << "model: " << out_dir << "/model.txt\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const DataOptions& data_opts,
             Split split, const std::string& out_path) {
    const SanModel model = load_model(model_path);
    const ResolvedData data = resolve_data(data_opts);
    const std::vector<Tensor> examples = data.examples_of(split);
    if (examples.empty()) throw std::runtime_error("split has no examples");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw io_error("cannot write " + out_path);
        out = &file;
    }
    *out << report_header() << "\n";
    const std::size_t m = model.kernels.front().extent(0);
    std::vector<PhiReport> reports;
    for (const Tensor& x : examples) {
        const PhiReport r = phi_report(model, x, forward(model, x));
        reports.push_back(r);
        *out << data.label() << "," << to_string(model.activation) << "," << m
             << ",0," << to_string(split) << "," << r.weights << ","
             << r.activations << "," << format_full(r.cr_inv) << ","
             << format_full(r.l_tilde) << "," << format_full(r.phi) << "\n";
    }
    const PhiAggregate agg = phi_bar(reports);
    std::cerr << to_string(split) << " phi_bar=" << format_full(agg.phi_bar)
              << " cr_inv=" << format_full(agg.mean_cr_inv)
              << " l_tilde=" << format_full(agg.mean_l_tilde) << " over "
              << agg.count << " examples\n";
    return 0;
}

int cmd_reconstruct(const std::string& model_path, const DataOptions& data_opts,
                    Split split, std::size_t index,
                    const std::string& out_dir) {
    const SanModel model = load_model(model_path);
    const ResolvedData data = resolve_data(data_opts);
    const std::vector<Tensor> examples = data.examples_of(split);
    if (index >= examples.size())
        throw std::runtime_error("example index " + std::to_string(index) +
                                 " out of range (split has " +
                                 std::to_string(examples.size()) + ")");
    const Tensor& x = examples[index];
    const ForwardTrace trace = forward(model, x);

    fs::create_directories(out_dir);
    write_series_csv(out_dir + "/x.csv", x);
    write_series_csv(out_dir + "/xhat.csv", trace.xhat);
    for (std::size_t i = 0; i < trace.alpha.size(); ++i) {
        write_series_csv(out_dir + "/alpha_" + std::to_string(i) + ".csv",
                         trace.alpha[i]);
        write_series_csv(out_dir + "/r_" + std::to_string(i) + ".csv",
                         trace.r[i]);
        save_sparse_map(sparse_from_tensor(trace.alpha[i]),
                        out_dir + "/alpha_" + std::to_string(i) + ".map");
    }
    write_reconstruction_svg(out_dir + "/reconstruction.svg", x, trace);
    const PhiReport r = phi_report(model, x, trace);
    std::cout << "cr_inv=" << format_full(r.cr_inv)
              << " l_tilde=" << format_full(r.l_tilde)
              << " phi=" << format_full(r.phi) << "\n"
              << "outputs in " << out_dir << "\n";
    return 0;
}

int cmd_export_kernels(const std::string& model_path,
                       const std::string& out_dir) {
    const SanModel model = load_model(model_path);
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir + "/kernels.csv");
    if (!csv) throw io_error("cannot write kernels.csv");
    for (const Tensor& w : model.kernels) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (j) csv << ",";
            csv << format_full(w[j]);
        }
        csv << "\n";
    }
    export_kernels_svg(model, out_dir + "/kernels.svg");
    std::cout << model.kernels.size() << " kernels exported to " << out_dir
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparsely activated networks: training, sweeps and reports"};
    app.require_subcommand(1);

    DataOptions data_opts;
    std::int64_t seed_flag = -1;
    TrainConfig cfg;
    std::string out_dir = "out";
    std::string model_path;
    std::string kernel_sizes_text;
    std::vector<std::string> activation_names;
    std::string split_name = "test";
    std::size_t q = 1;
    std::size_t index = 0;
    std::size_t jobs = 1;
    std::string eval_out;

    auto add_data_flags = [&](CLI::App* cmd) {
        cmd->add_option("--data", data_opts.path, "input data path")
            ->required();
        cmd->add_option("--format", data_opts.format,
                        "physionet-csv | uci-csv | idx-dir");
        cmd->add_option("--val-count", data_opts.val_count,
                        "idx-dir: train images held out for validation");
    };
    std::vector<CLI::Option*> border_tol_opts;
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--q", q, "number of kernels");
        cmd->add_option("--epochs", cfg.epochs, "training epochs");
        cmd->add_option("--batch", cfg.batch_size, "batch size");
        cmd->add_option("--lr", cfg.lr, "Adam learning rate");
        cmd->add_option("--seed", seed_flag,
                        "RNG seed (default: SANLAB_SEED or 0)");
        border_tol_opts.push_back(
            cmd->add_option("--border-tol", cfg.border_tol,
                            "Extrema border tolerance in samples (default: "
                            "3 for physionet-csv, 2 otherwise)"));
    };

    CLI::App* sweep = app.add_subcommand("sweep",
                                         "train one SAN per (activation, "
                                         "kernel size) and report the best");
    add_data_flags(sweep);
    add_train_flags(sweep);
    sweep->add_option("--activation", activation_names,
                      "activations to sweep (default: all five)");
    sweep->add_option("--kernel-sizes", kernel_sizes_text,
                      "list '1,2,3' or range '15..22[:stride]'");
    sweep->add_option("--jobs", jobs, "parallel sweep workers");
    sweep->add_option("--out", out_dir, "output directory");

    CLI::App* train_cmd =
        app.add_subcommand("train", "train one configuration to a model file");
    add_data_flags(train_cmd);
    add_train_flags(train_cmd);
    std::string activation_name = "Extrema";
    std::size_t kernel_size = 15;
    train_cmd->add_option("--activation", activation_name, "activation kind");
    train_cmd->add_option("--kernel-size", kernel_size, "kernel size m");
    train_cmd->add_option("--out", out_dir, "output directory");

    CLI::App* eval_cmd =
        app.add_subcommand("eval", "evaluate a model file on a split");
    add_data_flags(eval_cmd);
    eval_cmd->add_option("--model", model_path, "model file")->required();
    eval_cmd->add_option("--split", split_name, "train | validation | test");
    eval_cmd->add_option("--seed", seed_flag,
                         "RNG seed for seeded splits (uci-csv)");
    eval_cmd->add_option("--out", eval_out, "report CSV path (default stdout)");

    CLI::App* recon = app.add_subcommand(
        "reconstruct", "write x, xhat, alpha and r for one example");
    add_data_flags(recon);
    recon->add_option("--model", model_path, "model file")->required();
    recon->add_option("--split", split_name, "train | validation | test");
    recon->add_option("--index", index, "example index within the split");
    recon->add_option("--seed", seed_flag,
                      "RNG seed for seeded splits (uci-csv)");
    recon->add_option("--out", out_dir, "output directory");

    CLI::App* exportk = app.add_subcommand(
        "export-kernels", "write kernels as CSV and an SVG grid");
    exportk->add_option("--model", model_path, "model file")->required();
    exportk->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        cfg.seed = resolve_seed(seed_flag);
        data_opts.seed = cfg.seed;
        bool border_tol_given = false;
        for (const CLI::Option* opt : border_tol_opts)
            if (opt->count() > 0) border_tol_given = true;
        if (!border_tol_given)
            cfg.border_tol = data_opts.format == "physionet-csv" ? 3 : 2;
        if (sweep->parsed()) {
            SweepSpec spec;
            spec.q = q;
            spec.train = cfg;
            spec.out_dir = out_dir;
            spec.jobs = jobs;
            if (!activation_names.empty())
                spec.activations = parse_activations(activation_names);
            if (sweep->count("--kernel-sizes") > 0)
                spec.kernel_sizes = parse_kernel_sizes(kernel_sizes_text);
            if (spec.kernel_sizes.empty())
                throw usage_error("empty kernel size list");
            return cmd_sweep(data_opts, std::move(spec));
        }
        if (train_cmd->parsed()) {
            const auto kind = parse_activations({activation_name}).front();
            return cmd_train(data_opts, kind, kernel_size, q, cfg, out_dir);
        }
        if (eval_cmd->parsed())
            return cmd_eval(model_path, data_opts, parse_split(split_name),
                            eval_out);
        if (recon->parsed())
            return cmd_reconstruct(model_path, data_opts,
                                   parse_split(split_name), index, out_dir);
        if (exportk->parsed()) return cmd_export_kernels(model_path, out_dir);
        return 2;
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sanlab/datasets.hpp"
#include "sanlab/phi.hpp"
#include "sanlab/serialize.hpp"
#include "sanlab/svg.hpp"
#include "sanlab/train.hpp"

namespace sanlab {

/// Desk-scale ladder covering kernel sizes 1..250 at tractable cost.
inline std::vector<std::size_t> default_kernel_ladder() {
    return {1, 2, 3, 5, 8, 12, 19, 30, 47, 74, 117, 184, 250};
}

struct SweepSpec {
    std::string dataset_label;
    SignalCorpus corpus;
    std::vector<ActivationKind> activations{all_activation_kinds.begin(),
                                            all_activation_kinds.end()};
    std::vector<std::size_t> kernel_sizes = default_kernel_ladder();
    std::size_t q = 1;
    TrainConfig train;
    std::string out_dir = ".";
    std::size_t jobs = 1;
};

struct SweepCell {
    ActivationKind kind;
    std::size_t m = 0;
    std::size_t epoch = 0; // selected (1-based)
    SanModel model;        // snapshot at the selected epoch
    PhiAggregate validation;
    PhiAggregate test; // filled for the per-activation winner
    bool selected = false;
};

inline const char* report_header() {
    return "dataset,activation,m,epoch,split,W,A,cr_inv,l_tilde,phi";
}

inline std::string report_row(const std::string& dataset,
                              ActivationKind kind, std::size_t m,
                              std::size_t epoch, const std::string& split,
                              std::size_t weights, const PhiAggregate& agg) {
    std::ostringstream row;
    row << dataset << "," << to_string(kind) << "," << m << "," << epoch << ","
        << split << "," << weights << "," << format_full(agg.mean_activations)
        << "," << format_full(agg.mean_cr_inv) << ","
        << format_full(agg.mean_l_tilde) << "," << format_full(agg.phi_bar);
    return row.str();
}

inline void export_kernels_svg(const SanModel& model, const std::string& path) {
    const std::size_t q = model.kernels.size();
    const double panel_w = 220, panel_h = 120, pad = 16;
    svg::Document doc(pad + q * (panel_w + pad), panel_h + 2 * pad + 14);
    for (std::size_t i = 0; i < q; ++i) {
        const double x0 = pad + static_cast<double>(i) * (panel_w + pad);
        if (model.rank == 1) {
            const auto& y = model.kernels[i].values();
            auto [lo, hi] = svg::value_range({&y});
            svg::Panel panel{x0, pad, panel_w, panel_h, lo, hi, y.size()};
            doc.line(x0, panel.map_y(0.0), x0 + panel_w, panel.map_y(0.0),
                     "#cccccc");
            svg::draw_series(doc, panel, y, "#d62728", 1.4);
        } else {
            svg::draw_heatmap(doc, x0, pad, panel_w, panel_h,
                              model.kernels[i]);
        }
        doc.text(x0, pad + panel_h + 12, "kernel " + std::to_string(i), 10);
    }
    doc.save(path);
}

namespace detail {

inline SweepCell run_cell(const SweepSpec& spec,
                          const std::vector<Tensor>& train_set,
                          const std::vector<Tensor>& val_set,
                          ActivationKind kind, std::size_t m,
                          std::uint64_t cell_salt) {
    TrainConfig cfg = spec.train;
    cfg.seed = mix_seed(spec.train.seed, cell_salt);
    SanModel init =
        make_san(spec.q, m, kind, train_set.front().extents(), cfg.border_tol,
                 cfg.init_mean, cfg.init_std, mix_seed(cfg.seed, 0x5eed));
    const TrainResult result = train(init, train_set, val_set, cfg);
    SweepCell cell;
    cell.kind = kind;
    cell.m = m;
    cell.epoch = result.best_epoch;
    cell.model = result.best_model;
    cell.validation = result.history[result.best_epoch - 1].validation;
    return cell;
}

} // namespace detail

/// Trains one SAN per (activation, kernel size), selects the best kernel size
/// per activation by validation phi-bar, evaluates the winners on the test
/// split, and writes report.csv, summary.csv, per-cell partials, models and
/// kernel plots under spec.out_dir.
inline std::vector<SweepCell> run_sweep(const SweepSpec& spec) {
    if (spec.kernel_sizes.empty())
        throw std::invalid_argument("empty kernel size list");
    if (spec.activations.empty())
        throw std::invalid_argument("empty activation list");
    const std::vector<Tensor> train_set = spec.corpus.examples_of(Split::train);
    const std::vector<Tensor> val_set =
        spec.corpus.examples_of(Split::validation);
    const std::vector<Tensor> test_set = spec.corpus.examples_of(Split::test);
    if (train_set.empty() || val_set.empty() || test_set.empty())
        throw std::invalid_argument("corpus must populate all three splits");

    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);
    fs::create_directories(spec.out_dir + "/cells");

    struct Job {
        ActivationKind kind;
        std::size_t m;
        std::uint64_t salt;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < spec.activations.size(); ++a)
        for (std::size_t s = 0; s < spec.kernel_sizes.size(); ++s)
            jobs.push_back({spec.activations[a], spec.kernel_sizes[s],
                            static_cast<std::uint64_t>(a) * 1000003u +
                                spec.kernel_sizes[s]});

    std::vector<std::optional<SweepCell>> cells(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure = nullptr;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= jobs.size()) return;
            try {
                SweepCell cell =
                    detail::run_cell(spec, train_set, val_set, jobs[idx].kind,
                                     jobs[idx].m, jobs[idx].salt);
                // partial result, flushed as soon as the cell completes
                const std::string partial = spec.out_dir + "/cells/" +
                                            to_string(cell.kind) + "_m" +
                                            std::to_string(cell.m) + ".csv";
                std::ofstream out(partial);
                out << report_header() << "\n"
                    << report_row(spec.dataset_label, cell.kind, cell.m,
                                  cell.epoch, "validation",
                                  weights_count(cell.model), cell.validation)
                    << "\n";
                out.flush();
                cells[idx] = std::move(cell);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const std::size_t thread_count =
        std::max<std::size_t>(1, std::min(spec.jobs, jobs.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<SweepCell> results;
    results.reserve(cells.size());
    for (auto& cell : cells) results.push_back(std::move(*cell));

    // per-activation winner by validation phi-bar, then test evaluation
    for (ActivationKind kind : spec.activations) {
        std::vector<ModelCandidate> candidates;
        std::vector<std::size_t> idx_of;
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (results[i].kind != kind) continue;
            ModelCandidate c;
            c.kernel_size = results[i].m;
            c.epoch = results[i].epoch;
            c.model = results[i].model;
            c.validation = results[i].validation;
            candidates.push_back(std::move(c));
            idx_of.push_back(i);
        }
        const ModelCandidate& best = select_model(candidates);
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            if (&candidates[j] == &best) {
                SweepCell& cell = results[idx_of[j]];
                cell.selected = true;
                cell.test = evaluate(cell.model, test_set);
                save_model(cell.model, spec.out_dir + "/model_" +
                                           to_string(kind) + ".txt");
                export_kernels_svg(cell.model, spec.out_dir + "/kernels_" +
                                                   to_string(kind) + ".svg");
            }
        }
    }

    std::ofstream report(spec.out_dir + "/report.csv");
    if (!report) throw io_error("cannot write report.csv");
    report << report_header() << "\n";
    for (const SweepCell& cell : results) {
        report << report_row(spec.dataset_label, cell.kind, cell.m, cell.epoch,
                             "validation", weights_count(cell.model),
                             cell.validation)
               << "\n";
        if (cell.selected)
            report << report_row(spec.dataset_label, cell.kind, cell.m,
                                 cell.epoch, "test", weights_count(cell.model),
                                 cell.test)
                   << "\n";
    }

    std::ofstream summary(spec.out_dir + "/summary.csv");
    if (!summary) throw io_error("cannot write summary.csv");
    summary << "dataset,activation,m,cr_inv,l_tilde,phi_bar\n";
    for (const SweepCell& cell : results) {
        if (!cell.selected) continue;
        summary << spec.dataset_label << "," << to_string(cell.kind) << ","
                << cell.m << "," << format_full(cell.test.mean_cr_inv) << ","
                << format_full(cell.test.mean_l_tilde) << ","
                << format_full(cell.test.phi_bar) << "\n";
    }

    write_manifest(spec.corpus, spec.out_dir + "/manifest.csv");
    return results;
}

} // namespace sanlab

// Pipeline driver: gen-data | train | sample | render-views | eval. Every
// stage is reproducible from (config, seed); logs go to stderr as one JSON
// object per line, data goes to files under --out (or stdout for pair-mode
// eval).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "realdiff/config.hpp"
#include "realdiff/diffusion.hpp"
#include "realdiff/mesh.hpp"
#include "realdiff/metrics.hpp"
#include "realdiff/schedule.hpp"
#include "realdiff/synth.hpp"
#include "realdiff/tiny_denoiser.hpp"
#include "realdiff/train.hpp"

using namespace realdiff;
namespace fs = std::filesystem;

namespace {

// The timestamp is the one field excluded from the byte-identical-re-run
// guarantee; it never lands in data files.
void log_line(nlohmann::json fields) {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    fields["ts"] = buf;
    std::cerr << fields.dump() << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_effective_config(const fs::path& dir, const RunConfig& cfg) {
    write_text(dir / "run_config.json", dump_config(cfg) + "\n");
}

RunConfig make_config(const std::string& config_path, const CLI::Option* seed_opt,
                      uint64_t seed_flag) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed_flag;
    return cfg;
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    const DatasetParams params = dataset_params(cfg);
    log_line({{"event", "gen-data"},
              {"out", out_dir},
              {"seed", cfg.seed},
              {"objects", params.n_objects},
              {"views", params.views_per_object}});
    const auto recs = generate_dataset(params, stage_seed(cfg.seed, "data"), out_dir);
    write_effective_config(out_dir, cfg);
    log_line({{"event", "gen-data-done"}, {"objects", recs.size()}});
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir) {
    log_line({{"event", "train"},
              {"data", cfg.data_dir},
              {"out", out_dir},
              {"seed", cfg.seed},
              {"phase1_epochs", cfg.phase1_epochs},
              {"phase2_epochs", cfg.phase2_epochs}});
    const auto recs = load_dataset(cfg.data_dir);

    const Rng troot(stage_seed(cfg.seed, "train"));
    std::vector<TrainObject> dataset;
    dataset.reserve(recs.size());
    for (size_t i = 0; i < recs.size(); ++i) {
        Rng mono = troot.stream("mono", i);
        dataset.push_back(make_train_object(recs[i], cfg.mono_blur, mono));
    }

    fs::create_directories(out_dir);
    TrainConfig tc = train_config(cfg);
    tc.checkpoint_base = (fs::path(out_dir) / "model").string();
    const TrainResult r = train(dataset, tc);

    const nlohmann::json summary = {
        {"aborted", r.aborted},
        {"completed_epochs", r.completed_epochs},
        {"phase1_epochs", cfg.phase1_epochs},
        {"phase2_epochs", cfg.phase2_epochs},
        {"loss_curve", r.loss_curve},
    };
    write_text(fs::path(out_dir) / "loss.json", summary.dump(2) + "\n");
    write_effective_config(out_dir, cfg);

    log_line({{"event", "train-done"},
              {"completed_epochs", r.completed_epochs},
              {"aborted", r.aborted},
              {"final_loss",
               r.loss_curve.empty() ? nlohmann::json() : nlohmann::json(r.loss_curve.back())},
              {"checkpoint", tc.checkpoint_base}});
    return 0;
}

int cmd_sample(const RunConfig& cfg, const std::string& ckpt, const std::string& input_ply,
               const std::string& out_dir, int n_completions, bool with_mesh) {
    if (n_completions < 1) throw std::runtime_error("sample: --n must be >= 1");
    const TinyDenoiserParams params = read_checkpoint(ckpt);
    const PointCloud pc = read_ply(input_ply);
    if (pc.points.empty()) throw std::runtime_error("sample: input cloud is empty");

    // Fully-convolutional net: grid dims come from the config, T from the
    // checkpoint. The grid is anchored on the input cloud's bbox center,
    // matching the per-object anchoring used at dataset time.
    GridSpec spec;
    spec.nx = spec.ny = spec.nz = cfg.grid_n;
    spec.voxel_size = cfg.voxel_size;
    const Vec3 center = pc.bounds().center();
    const double half = 0.5 * cfg.grid_n * cfg.voxel_size;
    spec.origin = center - Vec3{half, half, half};
    spec.validate();

    const OccupancyGrid c0 = voxelize(pc, spec, 1);
    const ConditionMask mask = condition_split(c0);
    const VarianceSchedule sched = linear_schedule(params.T, cfg.beta0, cfg.betaT);
    const TinyDenoiser denoiser(params);
    const SamplerMode mode = config_sampler_mode(cfg);

    log_line({{"event", "sample"},
              {"ckpt", ckpt},
              {"input", input_ply},
              {"seed", cfg.seed},
              {"T", params.T},
              {"condition_voxels", mask.true_count()},
              {"completions", n_completions}});

    fs::create_directories(out_dir);
    const Rng sroot(stage_seed(cfg.seed, "sample"));
    for (int j = 0; j < n_completions; ++j) {
        Rng rj = sroot.stream("completion", static_cast<uint64_t>(j));
        const OccupancyGrid done = generate(denoiser, c0, mask, sched, rj, mode);
        const std::string base =
            (fs::path(out_dir) / ("completion_" + std::to_string(j))).string();
        write_grid(base, done, "input-bbox-center");
        if (with_mesh) write_mesh_ply(base + ".ply", marching_cubes(done, cfg.iso));
        log_line({{"event", "sample-done"},
                  {"grid", base},
                  {"occupied", done.occupied_count()}});
    }
    write_effective_config(out_dir, cfg);
    return 0;
}

int cmd_render_views(const RunConfig& cfg, const std::string& grid_base,
                     const std::string& out_dir, int n_views) {
    const OccupancyGrid grid = read_grid(grid_base);
    if (n_views < 1) n_views = cfg.views_per_object;
    const RenderMode mode = config_render_mode(cfg);

    log_line({{"event", "render-views"},
              {"grid", grid_base},
              {"out", out_dir},
              {"seed", cfg.seed},
              {"views", n_views},
              {"mode", cfg.render_mode}});

    Rng ring = Rng(stage_seed(cfg.seed, "render")).stream("ring");
    const auto cams = make_camera_ring(grid.spec.bounds(), n_views, cfg.image_size, ring);

    fs::create_directories(out_dir);
    for (size_t k = 0; k < cams.size(); ++k) {
        const RenderedView rv = render_view(grid, cams[k], cfg.render_samples, mode);
        Image mask(rv.silhouette.width, rv.silhouette.height);
        for (size_t i = 0; i < mask.data.size(); ++i)
            mask.data[i] = rv.silhouette.data[i] > 0.5 ? 1.0 : 0.0;

        const std::string stem =
            (fs::path(out_dir) / ("view_" + std::to_string(k))).string();
        write_camera_json(stem + ".json", cams[k]);
        write_pfm(stem + ".pfm", rv.depth);
        write_pfm(stem + ".sil.pfm", rv.silhouette);
        write_pgm(stem + ".pgm", mask);
    }
    write_effective_config(out_dir, cfg);
    log_line({{"event", "render-views-done"}, {"views", cams.size()}});
    return 0;
}

// ---------------------------------------------------------------------------
// eval

std::string num_or_nan(double x) {
    return std::isnan(x) ? "nan" : nlohmann::json(x).dump();
}

struct EvalRow {
    std::string id, category;
    double P = std::nan(""), R = std::nan(""), F1 = std::nan(""), EMD = std::nan("");
    double CD = std::nan(""), UHD = std::nan(""), MMD = std::nan(""), TMD = std::nan("");
};

// All metrics live in the reference cloud's evaluation frame. Headline
// numbers (P/R/F1/EMD/CD) score the first completion; MMD keeps the best F1
// among all of them; a single completion reports TMD 0 (no spread to
// measure). Completions with no surface leave their distance metrics nan.
EvalRow eval_object(const std::string& id, const std::string& category, const PointCloud& gt,
                    const std::vector<PointCloud>& completions, const PointCloud& partial,
                    const RunConfig& cfg, uint64_t emd_seed) {
    EvalRow row;
    row.id = id;
    row.category = category;

    const EvalFrame frame = eval_frame(gt);
    const PointCloud gt_n = to_frame(gt, frame);
    const PointCloud partial_n = to_frame(partial, frame);
    std::vector<PointCloud> preds_n;
    for (const PointCloud& c : completions) preds_n.push_back(to_frame(c, frame));

    std::vector<PointCloud> nonempty;
    for (const PointCloud& c : preds_n)
        if (!c.points.empty()) nonempty.push_back(c);

    if (!preds_n.empty() && !preds_n.front().points.empty()) {
        const Prf1 pr = precision_recall_f1(preds_n.front(), gt_n, cfg.tau);
        row.P = pr.precision;
        row.R = pr.recall;
        row.F1 = pr.f1;
        row.CD = chamfer(preds_n.front(), gt_n);
        if (preds_n.front().points.size() == gt_n.points.size())
            row.EMD = emd(preds_n.front(), gt_n, static_cast<size_t>(cfg.emd_max_exact),
                          emd_seed);
    } else if (!preds_n.empty()) {
        row.P = row.R = row.F1 = 0.0;  // empty completion: nothing recovered
    }
    if (!nonempty.empty()) {
        row.UHD = uhd(partial_n, nonempty);
        row.MMD = mmd({gt_n}, nonempty, cfg.tau);
        row.TMD = nonempty.size() < 2 ? 0.0 : tmd(nonempty);
    }
    return row;
}

nlohmann::json row_json(const EvalRow& r, const RunConfig& cfg) {
    return {
        {"id", r.id},         {"category", r.category}, {"P", r.P},   {"R", r.R},
        {"F1", r.F1},         {"EMD", r.EMD},           {"CD", r.CD}, {"UHD", r.UHD},
        {"MMD", r.MMD},       {"TMD", r.TMD},           {"tau", cfg.tau},
        {"seed", cfg.seed},
    };
}

std::string csv_line(const EvalRow& r, const RunConfig& cfg) {
    std::string s = r.id + "," + r.category;
    for (const double x : {r.P, r.R, r.F1, r.EMD, r.CD, r.UHD, r.MMD, r.TMD})
        s += "," + num_or_nan(x);
    s += "," + num_or_nan(cfg.tau) + "," + std::to_string(cfg.seed);
    return s + "\n";
}

void write_reports(const std::string& out_dir, const std::vector<EvalRow>& rows,
                   const RunConfig& cfg) {
    fs::create_directories(out_dir);
    std::string csv = "id,category,P,R,F1,EMD,CD,UHD,MMD,TMD,tau,seed\n";
    for (const EvalRow& r : rows) {
        write_text(fs::path(out_dir) / (r.id + ".report.json"),
                   row_json(r, cfg).dump(2) + "\n");
        csv += csv_line(r, cfg);
    }
    write_text(fs::path(out_dir) / "summary.csv", csv);
    write_effective_config(out_dir, cfg);
}

int cmd_eval_pair(const RunConfig& cfg, const std::vector<std::string>& pred_plys,
                  const std::string& gt_ply, const std::string& partial_ply,
                  const std::string& out_dir) {
    const PointCloud gt = read_ply(gt_ply);
    std::vector<PointCloud> preds;
    for (const std::string& p : pred_plys) preds.push_back(read_ply(p));
    const PointCloud partial = partial_ply.empty() ? gt : read_ply(partial_ply);

    log_line({{"event", "eval"},
              {"gt", gt_ply},
              {"completions", preds.size()},
              {"seed", cfg.seed}});

    const std::string id = fs::path(gt_ply).stem().string();
    const EvalRow row = eval_object(id, "-", gt, preds, partial, cfg,
                                    stage_seed(cfg.seed, "eval"));
    if (out_dir.empty()) {
        std::cout << row_json(row, cfg).dump(2) << "\n";
    } else {
        write_reports(out_dir, {row}, cfg);
    }
    log_line({{"event", "eval-done"}, {"objects", 1}});
    return 0;
}

PointCloud surface_points(const OccupancyGrid& grid, const RunConfig& cfg, Rng rng) {
    const TriangleMesh mesh = marching_cubes(grid, cfg.iso);
    if (mesh.empty()) return PointCloud{};
    return sample_surface(mesh, static_cast<size_t>(cfg.eval_samples), rng);
}

int cmd_eval_dataset(const RunConfig& cfg, const std::string& ckpt,
                     const std::string& out_dir) {
    const auto recs = load_dataset(cfg.data_dir);
    const TinyDenoiserParams params = read_checkpoint(ckpt);
    const VarianceSchedule sched = linear_schedule(params.T, cfg.beta0, cfg.betaT);
    const TinyDenoiser denoiser(params);
    const SamplerMode mode = config_sampler_mode(cfg);

    log_line({{"event", "eval"},
              {"data", cfg.data_dir},
              {"ckpt", ckpt},
              {"objects", recs.size()},
              {"completions_per_object", cfg.eval_completions},
              {"seed", cfg.seed}});

    const Rng eroot(stage_seed(cfg.seed, "eval"));
    std::vector<EvalRow> rows;
    for (size_t i = 0; i < recs.size(); ++i) {
        const ObjectRecord& rec = recs[i];
        Rng oroot = eroot.stream("object", i);
        const size_t v = oroot.below(rec.views.size());

        const OccupancyGrid& c0 = rec.view_grids[v];
        const ConditionMask mask = condition_split(c0);
        std::vector<PointCloud> completions;
        for (int j = 0; j < cfg.eval_completions; ++j) {
            Rng rj = oroot.stream("completion", static_cast<uint64_t>(j));
            const OccupancyGrid done = generate(denoiser, c0, mask, sched, rj, mode);
            Rng pts = oroot.stream("points", static_cast<uint64_t>(j));
            completions.push_back(surface_points(done, cfg, pts));
        }

        Rng gt_pts = oroot.stream("gt-points");
        const PointCloud gt = surface_points(rec.gt, cfg, gt_pts);
        if (gt.points.empty())
            throw std::runtime_error("eval: ground-truth surface is empty for " + rec.id);

        rows.push_back(eval_object(rec.id, category_to_string(rec.category), gt, completions,
                                   rec.views[v].cloud, cfg, oroot.stream("emd").seed()));
        log_line({{"event", "eval-object"},
                  {"id", rec.id},
                  {"input_view", v},
                  {"F1", std::isnan(rows.back().F1) ? nlohmann::json()
                                                    : nlohmann::json(rows.back().F1)}});
    }
    write_reports(out_dir, rows, cfg);
    log_line({{"event", "eval-done"}, {"objects", rows.size()}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occupancy-diffusion shape completion pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir, ckpt, input_ply, grid_base, gt_ply, partial_ply;
    std::vector<std::string> pred_plys;
    uint64_t seed = 0;
    int n_completions = 1, n_views = 0;
    bool with_mesh = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run-config JSON (omitted: built-in defaults)");
        return cmd->add_option("--seed", seed, "master seed (overrides the config)");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate a procedural multi-view dataset");
    const CLI::Option* gen_seed = add_common(gen);
    gen->add_option("--out", out_dir, "dataset output directory")->required();

    CLI::App* tr = app.add_subcommand("train", "train the denoiser on a dataset");
    const CLI::Option* tr_seed = add_common(tr);
    const CLI::Option* tr_data =
        tr->add_option("--data", data_dir, "dataset directory (overrides config data_dir)");
    tr->add_option("--out", out_dir, "checkpoint/loss output directory")->required();

    CLI::App* sa = app.add_subcommand("sample", "complete a partial view with a checkpoint");
    const CLI::Option* sa_seed = add_common(sa);
    sa->add_option("--ckpt", ckpt, "checkpoint base path (<base>.ckpt.json/.bin)")->required();
    sa->add_option("--input", input_ply, "partial-view point cloud (ASCII PLY)")->required();
    sa->add_option("--out", out_dir, "output directory (default: current)");
    sa->add_option("--n", n_completions, "number of completions to draw (default 1)");
    sa->add_flag("--mesh", with_mesh, "also write completion_<j>.ply surface meshes");

    CLI::App* rv = app.add_subcommand("render-views", "render a grid from a camera ring");
    const CLI::Option* rv_seed = add_common(rv);
    rv->add_option("--grid", grid_base, "grid base path (<base>.grid.json/.bin)")->required();
    rv->add_option("--out", out_dir, "image output directory")->required();
    rv->add_option("--views", n_views, "camera count (default: views_per_object)");

    CLI::App* ev = app.add_subcommand("eval", "score completions against ground truth");
    const CLI::Option* ev_seed = add_common(ev);
    ev->add_option("--pred", pred_plys, "completion cloud PLY (repeat for a set)");
    ev->add_option("--gt", gt_ply, "reference cloud PLY");
    ev->add_option("--partial", partial_ply,
                   "partial-input cloud for UHD (default: the reference cloud)");
    const CLI::Option* ev_data = ev->add_option(
        "--data", data_dir, "dataset directory: evaluate a checkpoint on every object");
    ev->add_option("--ckpt", ckpt, "checkpoint base path (dataset mode)");
    ev->add_option("--out", out_dir, "report directory (pair mode default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        CLI::App* a = &app;
        while (!a->get_subcommands().empty()) a = a->get_subcommands().front();
        std::cout << a->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (*gen) return cmd_gen_data(make_config(config_path, gen_seed, seed), out_dir);
        if (*tr) {
            RunConfig cfg = make_config(config_path, tr_seed, seed);
            if (tr_data->count() > 0) cfg.data_dir = data_dir;
            return cmd_train(cfg, out_dir);
        }
        if (*sa)
            return cmd_sample(make_config(config_path, sa_seed, seed), ckpt, input_ply,
                              out_dir.empty() ? "." : out_dir, n_completions, with_mesh);
        if (*rv)
            return cmd_render_views(make_config(config_path, rv_seed, seed), grid_base, out_dir,
                                    n_views);
        if (*ev) {
            RunConfig cfg = make_config(config_path, ev_seed, seed);
            const bool pair = !gt_ply.empty() || !pred_plys.empty();
            const bool dataset = ev_data->count() > 0 || !ckpt.empty();
            if (pair == dataset) {
                std::cerr << "eval: pass either --pred/--gt or --data/--ckpt\n\n" << ev->help();
                return 1;
            }
            if (pair) {
                if (gt_ply.empty() || pred_plys.empty()) {
                    std::cerr << "eval: pair mode needs --pred and --gt\n\n" << ev->help();
                    return 1;
                }
                return cmd_eval_pair(cfg, pred_plys, gt_ply, partial_ply, out_dir);
            }
            if (ckpt.empty() || ev_data->count() == 0) {
                std::cerr << "eval: dataset mode needs --data and --ckpt\n\n" << ev->help();
                return 1;
            }
            if (out_dir.empty()) {
                std::cerr << "eval: dataset mode needs --out\n\n" << ev->help();
                return 1;
            }
            cfg.data_dir = data_dir;
            return cmd_eval_dataset(cfg, ckpt, out_dir);
        }
    } catch (const std::exception& e) {
        log_line({{"event", "error"}, {"message", e.what()}});
        return 2;
    }
    return 1;
}

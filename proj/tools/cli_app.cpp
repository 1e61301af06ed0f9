#include "cli_app.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "micam/cam.hpp"
#include "micam/counterfactual.hpp"
#include "micam/eval.hpp"
#include "micam/imgio.hpp"
#include "micam/model.hpp"

namespace fs = std::filesystem;

namespace micam::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string stem_of(const std::string& path) {
    return fs::path(path).stem().string();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

ModelHandle load_model_checked(const RunConfig& cfg) {
    if (cfg.models.empty())
        throw UsageError("no model given (--model)");
    return ModelHandle::load(resolve_model_path(cfg.models.front()));
}

void require_inputs(const RunConfig& cfg) {
    if (cfg.inputs.empty())
        throw UsageError("no input images given");
}

fs::path ensure_output_dir(const RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

std::string saliency_csv(const Plane& plane) {
    std::string text;
    for (Eigen::Index y = 0; y < plane.rows(); ++y) {
        for (Eigen::Index x = 0; x < plane.cols(); ++x) {
            if (x) text += ',';
            text += fmt(plane(y, x));
        }
        text += '\n';
    }
    return text;
}

std::string weights_csv(const WeightVector& w) {
    std::string text = "channel,weight,method\n";
    for (int k = 0; k < w.size(); ++k)
        text += std::to_string(k) + "," + fmt(w.weights[k]) + "," + method_name(w.method) + "\n";
    return text;
}

std::vector<Method> parse_methods(const RunConfig& cfg) {
    if (cfg.methods.empty())
        return {Method::MiCam, Method::ScoreCam, Method::EigenCam};
    std::vector<Method> out;
    for (const std::string& name : cfg.methods)
        out.push_back(parse_method(name));
    return out;
}

struct Annotation {
    int class_index = -1;
    BBox box;
};

std::map<std::string, Annotation> load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read annotation file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed annotation file: " + std::string(e.what()));
    }
    std::map<std::string, Annotation> out;
    for (const auto& entry : j) {
        Annotation a;
        a.class_index = entry.value("class", -1);
        a.box = BBox{entry.at("x").get<int>(), entry.at("y").get<int>(),
                     entry.at("w").get<int>(), entry.at("h").get<int>()};
        out[entry.at("image").get<std::string>()] = a;
    }
    return out;
}

void parallel_for(size_t count, int workers, const std::function<void(size_t)>& body) {
    if (workers <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(count));
    pool.reserve(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace

std::string resolve_model_path(const std::string& path) {
    if (fs::exists(path))
        return path;
    if (fs::path(path).is_relative()) {
        if (const char* dir = std::getenv("MICAM_MODEL_DIR")) {
            const fs::path candidate = fs::path(dir) / path;
            if (fs::exists(candidate))
                return candidate.string();
        }
    }
    return path;
}

int run_explain(const RunConfig& cfg) {
    require_inputs(cfg);
    const ModelHandle model = load_model_checked(cfg);
    const Method method = parse_method(cfg.method);
    const fs::path dir = ensure_output_dir(cfg);

    parallel_for(cfg.inputs.size(), cfg.workers, [&](size_t i) {
        const std::string& input = cfg.inputs[i];
        const Image img = load_image(input);
        const Explanation ex =
            explain(model, img, cfg.layer, method, cfg.class_index, cfg.bins);
        const std::string stem = stem_of(input);
        save_png(render_overlay(ex.input, ex.map, cfg.overlay_alpha),
                 (dir / (stem + "_overlay.png")).string());
        write_text(dir / (stem + "_saliency.csv"), saliency_csv(ex.map.plane));
        write_text(dir / (stem + "_weights.csv"), weights_csv(ex.weights));
    });
    return 0;
}

int run_evaluate(const RunConfig& cfg) {
    require_inputs(cfg);
    const ModelHandle model = load_model_checked(cfg);
    const Method method = parse_method(cfg.method);
    const RankOrder insertion_order = cfg.insertion_order == "descending"
                                          ? RankOrder::Descending
                                          : RankOrder::Ascending;
    const fs::path dir = ensure_output_dir(cfg);

    std::map<std::string, Annotation> annotations;
    if (!cfg.annotations.empty())
        annotations = load_annotations(cfg.annotations);

    const InputSpec& spec = model.input_spec();
    const Scores baseline_scores = model.forward(
        Image(spec.height, spec.width, spec.channels,
              spec.channels == 3 ? ColorSpace::Rgb : ColorSpace::Gray));

    struct Row {
        EvalRecord record;
        double deletion_auc = 0.0;
        double insertion_auc = 0.0;
        std::optional<bool> hit;
        std::optional<double> ebpg_percent;
    };
    std::vector<Row> rows(cfg.inputs.size());

    parallel_for(cfg.inputs.size(), cfg.workers, [&](size_t i) {
        const std::string& input = cfg.inputs[i];
        const std::string base = fs::path(input).filename().string();

        const Annotation* ann = nullptr;
        if (auto it = annotations.find(base); it != annotations.end())
            ann = &it->second;

        int cls = cfg.class_index;
        if (ann && ann->class_index >= 0)
            cls = ann->class_index;

        const Image img = load_image(input);
        const Explanation ex = explain(model, img, cfg.layer, method, cls, cfg.bins);

        Row row;
        row.record.image_id = base;
        row.record.class_index = ex.class_index;
        row.record.score_original = ex.scores.values[ex.class_index];
        const Image masked = threshold_mask(ex.input, ex.map, cfg.theta, MaskMode::MuteBelow);
        row.record.score_masked = model.forward(masked).values[ex.class_index];
        row.record.score_baseline = baseline_scores.values[ex.class_index];
        row.deletion_auc =
            auc(deletion_curve(model, ex.input, ex.map, ex.class_index, cfg.step, cfg.steps));
        row.insertion_auc = auc(insertion_curve(model, ex.input, ex.map, ex.class_index, cfg.step,
                                                cfg.steps, insertion_order));
        if (ann) {
            row.hit = pointing_game(ex.map, ann->box);
            row.ebpg_percent = ebpg(ex.map, ann->box);
        }
        rows[i] = std::move(row);
    });

    std::string csv =
        "image,class,score_original,score_masked,score_baseline,"
        "deletion_auc,insertion_auc,pointing_hit,ebpg_percent\n";
    std::vector<EvalRecord> records;
    double del_sum = 0.0, ins_sum = 0.0, ebpg_sum = 0.0;
    int hits = 0, boxes = 0;
    for (const Row& row : rows) {
        records.push_back(row.record);
        del_sum += row.deletion_auc;
        ins_sum += row.insertion_auc;
        csv += row.record.image_id + "," + std::to_string(row.record.class_index) + "," +
               fmt(row.record.score_original) + "," + fmt(row.record.score_masked) + "," +
               fmt(row.record.score_baseline) + "," + fmt(row.deletion_auc) + "," +
               fmt(row.insertion_auc) + ",";
        if (row.hit) {
            ++boxes;
            hits += *row.hit ? 1 : 0;
            ebpg_sum += *row.ebpg_percent;
            csv += std::string(*row.hit ? "1" : "0") + "," + fmt(*row.ebpg_percent);
        } else {
            csv += ",";
        }
        csv += '\n';
    }
    write_text(dir / "evaluation.csv", csv);

    const double n = static_cast<double>(rows.size());
    nlohmann::json summary{
        {"images", rows.size()},
        {"method", cfg.method},
        {"layer", cfg.layer.empty() ? model.last_conv_layer() : cfg.layer},
        {"threshold", cfg.theta},
        {"average_drop", average_drop(records)},
        {"average_increase", average_increase(records)},
        {"mean_deletion_auc", del_sum / n},
        {"mean_insertion_auc", ins_sum / n},
    };
    if (boxes > 0) {
        summary["pointing_game_hit_rate"] = static_cast<double>(hits) / boxes;
        summary["ebpg_mean_percent"] = ebpg_sum / boxes;
    } else {
        summary["pointing_game_hit_rate"] = nullptr;
        summary["ebpg_mean_percent"] = nullptr;
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    return 0;
}

int run_counterfactual(const RunConfig& cfg) {
    require_inputs(cfg);
    const ModelHandle model = load_model_checked(cfg);
    const std::vector<Method> methods = parse_methods(cfg);
    const fs::path dir = ensure_output_dir(cfg);

    PerturbPolicy policy;
    if (cfg.policy == "occlude-top-salient")
        policy.kind = PerturbKind::OccludeTopSalient;
    else if (cfg.policy == "random-patch")
        policy.kind = PerturbKind::RandomPatch;
    else if (cfg.policy == "constant-fill")
        policy.kind = PerturbKind::ConstantFill;
    else
        throw UsageError("unknown perturbation policy: " + cfg.policy);
    policy.fraction = cfg.fraction;
    policy.fill = cfg.fill;
    policy.patch_w = cfg.patch_w;
    policy.patch_h = cfg.patch_h;
    policy.seed = cfg.seed;

    const Image img = load_image(cfg.inputs.front());
    const auto results = counterfactual_run(model, img, cfg.layer, policy, methods,
                                            cfg.class_index, cfg.bins);

    nlohmann::json summary;
    summary["image"] = fs::path(cfg.inputs.front()).filename().string();
    summary["policy"] = cfg.policy;
    summary["seed"] = cfg.seed;
    for (const CounterfactualResult& r : results) {
        std::string csv = "channel,alpha_original,alpha_counterfactual,abs_delta\n";
        for (int k = 0; k < r.original.size(); ++k)
            csv += std::to_string(k) + "," + fmt(r.original.weights[k]) + "," +
                   fmt(r.counterfactual.weights[k]) + "," + fmt(r.divergence.per_channel[k]) +
                   "\n";
        write_text(dir / ("counterfactual_" + method_name(r.method) + ".csv"), csv);
        summary["divergence"][method_name(r.method)] = {
            {"l1", r.divergence.l1},
            {"linf", r.divergence.linf},
            {"relative_l1", r.divergence.relative_l1},
        };
    }
    write_text(dir / "counterfactual.json", summary.dump(2) + "\n");
    return 0;
}

int run_sanity(const RunConfig& cfg) {
    require_inputs(cfg);
    const ModelHandle model = load_model_checked(cfg);
    const Method method = parse_method(cfg.method);
    const fs::path dir = ensure_output_dir(cfg);

    const Image img = load_image(cfg.inputs.front());
    const Explanation base = explain(model, img, cfg.layer, method, cfg.class_index, cfg.bins);
    save_png(render_overlay(base.input, base.map, 1.0), (dir / "map_original.png").string());

    const auto flatten = [](const Plane& p) {
        return std::vector<double>(p.data(), p.data() + p.size());
    };
    const std::vector<double> reference = flatten(base.map.plane);

    std::vector<int> depths = cfg.depths;
    std::sort(depths.begin(), depths.end());

    std::string csv = "depth,spearman\n0," + fmt(1.0) + "\n";
    for (int depth : depths) {
        const ModelHandle randomized = model.randomize_cascade(depth, cfg.seed);
        const Explanation ex =
            explain(randomized, img, cfg.layer, method, cfg.class_index, cfg.bins);
        const double rho = spearman_rank_correlation(reference, flatten(ex.map.plane));
        save_png(render_overlay(ex.input, ex.map, 1.0),
                 (dir / ("map_depth" + std::to_string(depth) + ".png")).string());
        csv += std::to_string(depth) + "," + fmt(rho) + "\n";
    }
    write_text(dir / "sanity.csv", csv);
    return 0;
}

int run_bench(const RunConfig& cfg) {
    require_inputs(cfg);
    if (cfg.repeats < 1)
        throw UsageError("bench repeats must be >= 1");
    if (cfg.models.empty())
        throw UsageError("no model given (--model)");
    const std::vector<Method> methods = parse_methods(cfg);
    const fs::path dir = ensure_output_dir(cfg);

    const Image img = load_image(cfg.inputs.front());

    std::string csv = "model,method,runs,mean_seconds\n";
    for (const std::string& model_path : cfg.models) {
        const ModelHandle model = ModelHandle::load(resolve_model_path(model_path));
        for (Method method : methods) {
            double total = 0.0;
            for (int r = 0; r < cfg.repeats; ++r) {
                const auto start = std::chrono::steady_clock::now();
                explain(model, img, cfg.layer, method, cfg.class_index, cfg.bins);
                const auto end = std::chrono::steady_clock::now();
                total += std::chrono::duration<double>(end - start).count();
            }
            csv += model.name() + "," + method_name(method) + "," + std::to_string(cfg.repeats) +
                   "," + fmt(total / cfg.repeats) + "\n";
        }
    }
    write_text(dir / "bench.csv", csv);
    return 0;
}

}  // namespace micam::cli

// emo3d command-line entry point: dataset generation/validation, training,
// evaluation, rendering and corpus statistics behind one binary.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "emo3d/analysis.hpp"
#include "emo3d/datagen.hpp"
#include "emo3d/metric.hpp"
#include "emo3d/models.hpp"
#include "emo3d/parallel.hpp"
#include "emo3d/version.hpp"

namespace {

using namespace emo3d;
using nlohmann::json;
using nlohmann::ordered_json;

int g_log_level = 1; // 0 quiet, 1 info, 2 debug

void log_info(const std::string& message) {
    if (g_log_level >= 1) {
        std::cerr << "[emo3d] " << message << "\n";
    }
}

// --config <file> supplies defaults per subcommand; explicit flags win.
json load_config_section(const std::string& config_path, const std::string& section) {
    if (config_path.empty()) {
        return json::object();
    }
    std::ifstream in(config_path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot open config file " + config_path);
    }
    json config;
    try {
        in >> config;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, "bad config file: " + std::string(e.what()));
    }
    if (config.contains(section)) {
        return config.at(section);
    }
    return json::object();
}

template <typename T>
void merge_option(const CLI::Option* opt, const json& section, const char* key, T& value) {
    if (opt != nullptr && opt->count() > 0) {
        return; // explicit flag wins
    }
    if (section.contains(key)) {
        value = section.at(key).get<T>();
    }
}

void write_run_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                        const ordered_json& resolved) {
    std::filesystem::create_directories(out_dir);
    ordered_json manifest;
    manifest["tool"] = "emo3d";
    manifest["version"] = kVersion;
    manifest["subcommand"] = subcommand;
    manifest["resolved"] = resolved;
    std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write run manifest in " + out_dir.string());
    }
    out << manifest.dump(2) << "\n";
}

std::shared_ptr<EmbeddingBackend> make_joint_backend(const std::string& spec,
                                                     const std::string& cache_dir) {
    std::shared_ptr<EmbeddingBackend> backend;
    if (spec.rfind("linear:", 0) == 0) {
        backend = std::make_shared<LinearFileBackend>(spec.substr(7));
    } else if (spec == "mock") {
        backend = std::make_shared<MockBackend>(512);
    } else if (spec.rfind("mock:", 0) == 0) {
        backend = std::make_shared<MockBackend>(std::stoi(spec.substr(5)));
    } else {
        throw Error(ErrorKind::Backend,
                    "unknown backend \"" + spec + "\" (use mock, mock:<dim> or linear:<file>)");
    }
    if (!cache_dir.empty()) {
        backend = std::make_shared<CachedBackend>(backend,
                                                  std::make_shared<EmbeddingCache>(cache_dir));
    }
    return backend;
}

std::shared_ptr<LmBackend> make_lm_backend(ModelType type, Pooling pooling) {
    const char* name = type == ModelType::bert_mlp ? "mock-bert" : "mock-glot500";
    return std::make_shared<LmBackend>(name, 768, pooling);
}

// ---- subcommand bodies -------------------------------------------------

int run_validate(const std::string& dataset_path) {
    const auto triads = load_dataset(dataset_path);
    const SplitCounts counts = count_splits(triads);
    std::cout << "records=" << counts.total() << " train=" << counts.train
              << " val=" << counts.val << " test=" << counts.test << "\n";
    return 0;
}

struct DatagenArgs {
    std::string out;
    int per_class = 8;
    int images_per_text = 1;
    std::vector<double> split{0.8, 0.1, 0.1};
    std::uint64_t seed = 7;
    bool live = false;
    std::string templates_dir;
    std::string cache_dir;
    double failure_cap = 0.5;
    std::string text_endpoint = "https://api.openai.com";
    std::string image_endpoint = "https://api.openai.com";
    std::string text_model = "gpt-3.5-turbo";
    std::string image_model = "dall-e-3";
};

int run_datagen(const DatagenArgs& args) {
    const PromptTemplates templates = args.templates_dir.empty()
                                          ? PromptTemplates::defaults()
                                          : PromptTemplates::load(args.templates_dir);

    std::shared_ptr<TextGenClient> text_client;
    std::shared_ptr<ImageGenClient> image_client;
    if (args.live) {
        HttpClientConfig text_config;
        text_config.base_url = args.text_endpoint;
        text_config.model = args.text_model;
        text_config.api_key_env = "EMO3D_TEXT_API_KEY";
        HttpClientConfig image_config;
        image_config.base_url = args.image_endpoint;
        image_config.model = args.image_model;
        image_config.api_key_env = "EMO3D_IMAGE_API_KEY";
        text_client = std::make_shared<HttpTextGenClient>(text_config);
        image_client = std::make_shared<HttpImageGenClient>(image_config);
        if (!args.cache_dir.empty()) {
            text_client = std::make_shared<CachedTextGenClient>(text_client, args.cache_dir);
            image_client = std::make_shared<CachedImageGenClient>(image_client, args.cache_dir);
        }
    } else {
        text_client = std::make_shared<StubTextGenClient>(args.seed);
        image_client = std::make_shared<StubImageGenClient>(args.seed);
    }

    std::vector<TextItem> items;
    for (int c = 0; c < kEmotionCount; ++c) {
        const auto texts = generate_descriptions(*text_client, templates,
                                                 static_cast<EmotionClass>(c), args.per_class);
        for (const auto& text : texts) {
            const auto extraction = extract_emotion_distribution(*text_client, templates, text);
            items.push_back({text, extraction.distribution});
        }
        log_info("generated " + std::to_string(texts.size()) + " descriptions for " +
                 emotion_name(c));
    }

    PixelStatTracker tracker;
    BuildOptions options;
    options.split_ratios = {args.split[0], args.split[1], args.split[2]};
    options.images_per_text = args.images_per_text;
    options.failure_cap = args.failure_cap;
    const BuildResult result =
        build_triads(items, *image_client, tracker, args.out, options, templates);

    ordered_json resolved;
    resolved["out"] = args.out;
    resolved["per_class"] = args.per_class;
    resolved["images_per_text"] = args.images_per_text;
    resolved["split"] = args.split;
    resolved["seed"] = args.seed;
    resolved["live"] = args.live;
    resolved["templates"] = {{"describe_sha256", templates.describe_hash()},
                             {"distribution_sha256", templates.distribution_hash()}};
    resolved["clients"] = {{"text", text_client->id()}, {"image", image_client->id()}};
    write_run_manifest(args.out, "datagen", resolved);

    std::cout << "wrote " << result.triads_written << " triads ("
              << result.skipped << " skipped) to " << result.dataset_path.string() << "\n";
    return 0;
}

struct TrainArgs {
    std::string model;
    std::string dataset;
    std::string out;
    std::string backend = "mock:512";
    std::string image_root;
    std::string cache_dir;
    TrainConfig config;
    std::string pooling = "mean";
};

int run_train(const TrainArgs& args) {
    const auto type = model_type_from_name(args.model);
    if (!type) {
        throw Error(ErrorKind::Usage, "unknown model \"" + args.model + "\"");
    }
    TrainConfig config = args.config;
    config.pooling = args.pooling == "first_token" ? Pooling::first_token : Pooling::mean;
    config.validate();

    const auto dataset = load_dataset(args.dataset);
    const std::filesystem::path image_root =
        args.image_root.empty() ? std::filesystem::path(args.dataset).parent_path()
                                : std::filesystem::path(args.image_root);

    std::unique_ptr<FEGModel> model;
    std::string backend_name;
    switch (*type) {
        case ModelType::bert_mlp:
        case ModelType::xlm_mlp: {
            auto lm = make_lm_backend(*type, config.pooling);
            backend_name = lm->name();
            model = train_text_regressor(lm, dataset, config, args.model);
            break;
        }
        case ModelType::emotion_xlm: {
            auto lm = make_lm_backend(*type, config.pooling);
            backend_name = lm->name();
            model = train_emotion_xlm(lm, dataset, config);
            break;
        }
        case ModelType::clip_mlp: {
            auto backend = make_joint_backend(args.backend, args.cache_dir);
            backend_name = backend->name();
            model = train_clip_regressor(backend, dataset, config, image_root);
            break;
        }
        case ModelType::autoencoder_clip: {
            auto backend = make_joint_backend(args.backend, args.cache_dir);
            backend_name = backend->name();
            model = train_blendshape_autoencoder(backend, dataset, config, image_root);
            break;
        }
    }

    model->save(args.out);

    ordered_json resolved;
    resolved["model"] = args.model;
    resolved["dataset"] = args.dataset;
    resolved["backend"] = backend_name;
    resolved["epochs"] = config.epochs;
    resolved["batch_size"] = config.batch_size;
    resolved["learning_rate"] = config.learning_rate;
    resolved["seed"] = config.seed;
    resolved["training_pairs"] = model->stats().training_pairs;
    resolved["final_loss"] = model->stats().final_loss;
    write_run_manifest(args.out, "train", resolved);

    std::cout << "trained " << args.model << ": pairs=" << model->stats().training_pairs
              << " final_loss=" << model->stats().final_loss << " -> " << args.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string model;
    std::string dataset;
    std::string rig = "builtin";
    std::string backend = "mock:512";
    std::string cache_dir;
    int k = 5;
    int n = 400;
    std::uint64_t seed = 7;
    double eps = 1e-6;
    std::string out = "report.csv";
};

int run_eval(const EvalArgs& args) {
    const auto backend = make_joint_backend(args.backend, args.cache_dir);
    const auto model = load_model(args.model, backend);
    const auto dataset = load_dataset(args.dataset);

    const FaceRig rig = resolve_rig(args.rig);
    const MeshRenderer renderer(rig, RenderConfig{});

    log_info("selecting prompt bank (n=" + std::to_string(args.n) + ")");
    const PromptBank bank = select_prompt_bank(dataset, args.n, args.seed, *backend);

    log_info("evaluating " + model->name());
    MetricResult result = evaluate_emo3d(*model, bank, renderer, *backend, args.k, args.eps);

    std::vector<Triad> testset;
    for (const auto& t : dataset) {
        if (t.split == Split::test) {
            testset.push_back(t);
        }
    }
    result.mean_mse = evaluate_mse(*model, testset);

    ReportRow row{model->name(), result.mean_mse, result.mean_emo3d, result.k,
                  result.n,      result.backend_name, result.rig_name, result.failures};
    const std::string csv = report_csv({row});
    std::ofstream out(args.out, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + args.out);
    }
    out << csv;
    std::cout << report_text({row});

    const auto out_dir = std::filesystem::path(args.out).parent_path();
    ordered_json resolved;
    resolved["model"] = args.model;
    resolved["dataset"] = args.dataset;
    resolved["rig"] = result.rig_name;
    resolved["backend"] = result.backend_name;
    resolved["k"] = args.k;
    resolved["n"] = args.n;
    resolved["seed"] = args.seed;
    resolved["eps"] = args.eps;
    resolved["mean_emo3d"] = result.mean_emo3d;
    resolved["mean_mse"] = *result.mean_mse;
    resolved["failures"] = result.failures;
    write_run_manifest(out_dir.empty() ? "." : out_dir, "eval", resolved);
    return 0;
}

struct RenderArgs {
    std::string blendshapes;
    std::string rig = "builtin";
    std::string out = "face.png";
    int width = 224;
    int height = 224;
    std::string save_rig;
};

int run_render(const RenderArgs& args) {
    const FaceRig rig = resolve_rig(args.rig);
    if (!args.save_rig.empty()) {
        save_rig(args.save_rig, rig);
        log_info("exported rig to " + args.save_rig);
    }

    std::ifstream in(args.blendshapes);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open blendshapes file " + args.blendshapes);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "blendshapes file: " + std::string(e.what()));
    }
    std::vector<double> weights;
    if (j.is_array()) {
        weights = j.get<std::vector<double>>();
    } else if (j.contains("weights")) {
        weights = j.at("weights").get<std::vector<double>>();
    } else {
        throw Error(ErrorKind::Parse, "expected a JSON array or {\"weights\": [...]}");
    }
    const BlendshapeVector blend = BlendshapeVector::from_values(weights);

    RenderConfig config;
    config.width = args.width;
    config.height = args.height;
    const MeshRenderer renderer(rig, config);
    write_png(args.out, renderer.render(blend));
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

int run_stats(const std::string& dataset_path, const std::string& out_path) {
    const auto dataset = load_dataset(dataset_path);
    const auto stats = compute_stats(dataset);
    const std::string payload = stats_to_json(stats);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write " + out_path);
        }
        out << payload;
    }
    for (int c = 0; c < kEmotionCount; ++c) {
        const auto& s = stats[static_cast<std::size_t>(c)];
        std::cout << emotion_name(c) << ": prompts=" << s.num_prompts
                  << " words=" << s.num_words << " unique=" << s.num_unique_words << "\n";
    }
    return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_path) {
    std::vector<ReportRow> rows;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorKind::Io, "cannot open " + path);
        }
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            if (first) {
                first = false;
                if (line.rfind("model,", 0) == 0) {
                    continue;
                }
            }
            std::istringstream row_stream(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(row_stream, field, ',')) {
                fields.push_back(field);
            }
            if (fields.size() < 8) {
                throw Error(ErrorKind::Parse, path + ": expected 8 CSV columns, got " +
                                                  std::to_string(fields.size()));
            }
            ReportRow row;
            row.model = fields[0];
            if (!fields[1].empty()) {
                row.mse = std::stod(fields[1]);
            }
            row.emo3d = std::stod(fields[2]);
            row.k = std::stoi(fields[3]);
            row.n = std::stoi(fields[4]);
            row.backend = fields[5];
            row.rig = fields[6];
            row.failures = static_cast<std::size_t>(std::stoull(fields[7]));
            rows.push_back(std::move(row));
        }
    }
    if (rows.empty()) {
        throw Error(ErrorKind::Data, "no report rows found");
    }
    std::cout << report_text(rows);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write " + out_path);
        }
        out << report_csv(rows);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Emo3D toolkit: dataset pipeline, FEG baselines and the Emo3D metric"};
    app.require_subcommand(1);
    app.set_version_flag("--version", emo3d::kVersion);

    std::string config_path;
    int jobs = 0;
    app.add_option("--config", config_path, "JSON config file; explicit flags win");
    app.add_option("--jobs", jobs, "max worker threads (0 = all cores)");
    app.add_option("--log-level", g_log_level, "0 quiet, 1 info, 2 debug");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "validate a dataset file");
    std::string validate_dataset;
    validate_cmd->add_option("--dataset", validate_dataset, "dataset JSONL")->required();

    // datagen
    auto* datagen_cmd = app.add_subcommand("datagen", "build a triad dataset");
    DatagenArgs datagen_args;
    auto* dg_out = datagen_cmd->add_option("--out", datagen_args.out, "output directory");
    dg_out->required();
    auto* dg_per_class =
        datagen_cmd->add_option("--per-class", datagen_args.per_class, "descriptions per class");
    auto* dg_ipt = datagen_cmd->add_option("--images-per-text", datagen_args.images_per_text,
                                           "images per description");
    auto* dg_split = datagen_cmd->add_option("--split", datagen_args.split,
                                             "train/val/test ratios")->expected(3);
    auto* dg_seed = datagen_cmd->add_option("--seed", datagen_args.seed, "stub seed");
    datagen_cmd->add_flag("--live", datagen_args.live,
                          "use live API clients (needs EMO3D_TEXT_API_KEY / EMO3D_IMAGE_API_KEY)");
    datagen_cmd->add_option("--templates", datagen_args.templates_dir,
                            "directory with describe.txt / distribution.txt");
    datagen_cmd->add_option("--cache-dir", datagen_args.cache_dir, "response cache directory");
    datagen_cmd->add_option("--failure-cap", datagen_args.failure_cap,
                            "max tolerated failure fraction");
    datagen_cmd->add_option("--text-endpoint", datagen_args.text_endpoint, "live text endpoint");
    datagen_cmd->add_option("--image-endpoint", datagen_args.image_endpoint,
                            "live image endpoint");
    datagen_cmd->add_option("--text-model", datagen_args.text_model, "live text model id");
    datagen_cmd->add_option("--image-model", datagen_args.image_model, "live image model id");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a baseline model");
    TrainArgs train_args;
    train_cmd->add_option("--model", train_args.model,
                          "bert_mlp|xlm_mlp|emotion_xlm|clip_mlp|autoencoder_clip")
        ->required();
    train_cmd->add_option("--dataset", train_args.dataset, "dataset JSONL")->required();
    train_cmd->add_option("--out", train_args.out, "checkpoint directory")->required();
    auto* tr_backend = train_cmd->add_option("--backend", train_args.backend,
                                             "joint backend: mock, mock:<dim>, linear:<file>");
    train_cmd->add_option("--image-root", train_args.image_root,
                          "base directory for triad image paths");
    train_cmd->add_option("--cache-dir", train_args.cache_dir, "embedding cache directory");
    auto* tr_epochs = train_cmd->add_option("--epochs", train_args.config.epochs, "epochs");
    auto* tr_batch =
        train_cmd->add_option("--batch-size", train_args.config.batch_size, "batch size");
    auto* tr_lr =
        train_cmd->add_option("--lr", train_args.config.learning_rate, "learning rate");
    auto* tr_seed = train_cmd->add_option("--seed", train_args.config.seed, "training seed");
    auto* tr_l1 = train_cmd->add_option("--lambda1", train_args.config.lambda1, "blendshape loss weight");
    auto* tr_l2 = train_cmd->add_option("--lambda2", train_args.config.lambda2, "emotion loss weight");
    auto* tr_lt =
        train_cmd->add_option("--lambda-text", train_args.config.lambda_text, "text alignment weight");
    auto* tr_li = train_cmd->add_option("--lambda-image", train_args.config.lambda_image,
                                        "image alignment weight");
    auto* tr_tf = train_cmd->add_option("--teacher-forcing-ratio",
                                        train_args.config.teacher_forcing_ratio,
                                        "ground-truth usage probability");
    auto* tr_hw =
        train_cmd->add_option("--hidden-width", train_args.config.hidden_width, "hidden width");
    auto* tr_hl = train_cmd->add_option("--hidden-layers", train_args.config.hidden_layers,
                                        "hidden layer count");
    auto* tr_pool = train_cmd->add_option("--pooling", train_args.pooling, "mean|first_token");
    train_cmd->add_flag("--variational", train_args.config.variational,
                        "reparameterized latent for autoencoder_clip");
    train_cmd->add_option("--prior-weight", train_args.config.prior_weight,
                          "prior-divergence weight in variational mode");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint with the Emo3D metric");
    EvalArgs eval_args;
    eval_cmd->add_option("--model", eval_args.model, "checkpoint directory")->required();
    eval_cmd->add_option("--dataset", eval_args.dataset, "dataset JSONL")->required();
    auto* ev_rig = eval_cmd->add_option("--rig", eval_args.rig, "builtin or a rig directory");
    auto* ev_backend = eval_cmd->add_option("--backend", eval_args.backend,
                                            "joint backend: mock, mock:<dim>, linear:<file>");
    eval_cmd->add_option("--cache-dir", eval_args.cache_dir, "embedding cache directory");
    auto* ev_k = eval_cmd->add_option("--k", eval_args.k, "retrieved prompts per image");
    auto* ev_n = eval_cmd->add_option("--n", eval_args.n, "prompt bank size");
    auto* ev_seed = eval_cmd->add_option("--seed", eval_args.seed, "bank sampling seed");
    auto* ev_eps = eval_cmd->add_option("--eps", eval_args.eps, "KL smoothing epsilon");
    auto* ev_out = eval_cmd->add_option("--out", eval_args.out, "report CSV path");

    // render
    auto* render_cmd = app.add_subcommand("render", "render a blendshape vector to PNG");
    RenderArgs render_args;
    render_cmd->add_option("--blendshapes", render_args.blendshapes, "JSON file with 52 weights")
        ->required();
    render_cmd->add_option("--rig", render_args.rig, "builtin or a rig directory");
    render_cmd->add_option("--out", render_args.out, "output PNG path");
    render_cmd->add_option("--width", render_args.width, "image width");
    render_cmd->add_option("--height", render_args.height, "image height");
    render_cmd->add_option("--save-rig", render_args.save_rig,
                           "also export the resolved rig to this directory");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "corpus statistics per emotion class");
    std::string stats_dataset;
    std::string stats_out;
    stats_cmd->add_option("--dataset", stats_dataset, "dataset JSONL")->required();
    stats_cmd->add_option("--out", stats_out, "stats JSON path");

    // report
    auto* report_cmd = app.add_subcommand("report", "merge and rank evaluation CSVs");
    std::vector<std::string> report_inputs;
    std::string report_out;
    report_cmd->add_option("--in", report_inputs, "input CSV files")->required();
    report_cmd->add_option("--out", report_out, "merged CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        emo3d::set_max_jobs(jobs);

        if (*validate_cmd) {
            return run_validate(validate_dataset);
        }
        if (*datagen_cmd) {
            const json section = load_config_section(config_path, "datagen");
            merge_option(dg_per_class, section, "per_class", datagen_args.per_class);
            merge_option(dg_ipt, section, "images_per_text", datagen_args.images_per_text);
            merge_option(dg_seed, section, "seed", datagen_args.seed);
            merge_option(dg_split, section, "split", datagen_args.split);
            (void)dg_out;
            return run_datagen(datagen_args);
        }
        if (*train_cmd) {
            const json section = load_config_section(config_path, "train");
            merge_option(tr_backend, section, "backend", train_args.backend);
            merge_option(tr_epochs, section, "epochs", train_args.config.epochs);
            merge_option(tr_batch, section, "batch_size", train_args.config.batch_size);
            merge_option(tr_lr, section, "learning_rate", train_args.config.learning_rate);
            merge_option(tr_seed, section, "seed", train_args.config.seed);
            merge_option(tr_l1, section, "lambda1", train_args.config.lambda1);
            merge_option(tr_l2, section, "lambda2", train_args.config.lambda2);
            merge_option(tr_lt, section, "lambda_text", train_args.config.lambda_text);
            merge_option(tr_li, section, "lambda_image", train_args.config.lambda_image);
            merge_option(tr_tf, section, "teacher_forcing_ratio",
                         train_args.config.teacher_forcing_ratio);
            merge_option(tr_hw, section, "hidden_width", train_args.config.hidden_width);
            merge_option(tr_hl, section, "hidden_layers", train_args.config.hidden_layers);
            merge_option(tr_pool, section, "pooling", train_args.pooling);
            return run_train(train_args);
        }
        if (*eval_cmd) {
            const json section = load_config_section(config_path, "eval");
            merge_option(ev_rig, section, "rig", eval_args.rig);
            merge_option(ev_backend, section, "backend", eval_args.backend);
            merge_option(ev_k, section, "k", eval_args.k);
            merge_option(ev_n, section, "n", eval_args.n);
            merge_option(ev_seed, section, "seed", eval_args.seed);
            merge_option(ev_eps, section, "eps", eval_args.eps);
            merge_option(ev_out, section, "out", eval_args.out);
            return run_eval(eval_args);
        }
        if (*render_cmd) {
            return run_render(render_args);
        }
        if (*stats_cmd) {
            return run_stats(stats_dataset, stats_out);
        }
        if (*report_cmd) {
            return run_report(report_inputs, report_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

// aura: train, evaluate and analyze the exogenous-informed forecaster.

#include <iostream>
#include <string>
#include <vector>

#include "aura/cli.hpp"

namespace {

void print_usage(std::ostream& os) {
    os << "usage: aura <command> [options]\n"
          "\n"
          "commands:\n"
          "  train      train a model and write model.ckpt + train_report.json\n"
          "  eval       evaluate a checkpoint on the test split\n"
          "  detect     residual anomaly detection with FAR-calibrated threshold\n"
          "  ablate     run the eight-variant ablation matrix\n"
          "  gates      gate-coefficient statistics and histogram\n"
          "  generate   write the synthetic corpus as CSV + attribute sidecar\n"
          "  plot       render SVG charts from report JSON files\n"
          "\n"
          "options:\n"
          "  --config PATH        key=value configuration file\n"
          "  --set key=value      override one configuration key (repeatable)\n"
          "  --out DIR            output directory (overrides out.dir)\n"
          "  --seed N             sets model/train/synth/detect seeds\n"
          "  --checkpoint PATH    checkpoint for eval/detect/gates\n"
          "                       (default: <out.dir>/model.ckpt)\n"
          "  --help               this text\n"
          "\n"
          "environment: AURA_EMBEDDER_URL overrides embedder.url\n"
          "exit codes: 0 success, 1 runtime failure, 2 usage error\n";
}

struct Args {
    std::string command;
    std::string config_path;
    std::string checkpoint;
    std::vector<std::string> sets;
    std::vector<std::string> positional;
    bool help = false;
};

int parse_args(int argc, char** argv, Args& args) {
    if (argc < 2) return 2;
    args.command = argv[1];
    if (args.command == "--help" || args.command == "-h" || args.command == "help") {
        args.help = true;
        return 0;
    }
    for (int i = 2; i < argc; ++i) {
        const std::string a = argv[i];
        auto next = [&](const char* what) -> const char* {
            if (i + 1 >= argc) {
                std::cerr << "missing value after " << what << "\n";
                return nullptr;
            }
            return argv[++i];
        };
        if (a == "--config") {
            const char* v = next("--config");
            if (!v) return 2;
            args.config_path = v;
        } else if (a == "--set") {
            const char* v = next("--set");
            if (!v) return 2;
            args.sets.push_back(v);
        } else if (a == "--out") {
            const char* v = next("--out");
            if (!v) return 2;
            args.sets.push_back(std::string("out.dir=") + v);
        } else if (a == "--seed") {
            const char* v = next("--seed");
            if (!v) return 2;
            for (const char* key : {"model.seed", "train.seed", "synth.seed", "detect.seed"})
                args.sets.push_back(std::string(key) + "=" + v);
        } else if (a == "--checkpoint") {
            const char* v = next("--checkpoint");
            if (!v) return 2;
            args.checkpoint = v;
        } else if (a == "--help" || a == "-h") {
            args.help = true;
        } else if (!a.empty() && a[0] == '-') {
            std::cerr << "unknown option: " << a << "\n";
            return 2;
        } else {
            args.positional.push_back(a);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Args args;
    const int parse_rc = parse_args(argc, argv, args);
    if (parse_rc != 0) {
        print_usage(std::cerr);
        return parse_rc;
    }
    if (args.help) {
        print_usage(std::cout);
        return 0;
    }

    const std::vector<std::string> commands = {"train",  "eval",     "detect", "ablate",
                                               "gates",  "generate", "plot"};
    bool known = false;
    for (const auto& c : commands) known = known || c == args.command;
    if (!known) {
        std::cerr << "unknown command: " << args.command << "\n";
        print_usage(std::cerr);
        return 2;
    }

    aura::config::RunConfig cfg;
    if (!args.config_path.empty()) {
        if (!std::filesystem::exists(args.config_path)) {
            std::cerr << "config file not found: " << args.config_path << "\n";
            print_usage(std::cerr);
            return 2;
        }
        try {
            cfg = aura::config::RunConfig::load(args.config_path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }

    try {
        for (const auto& kv : args.sets) cfg.set_kv(kv);
        const std::string checkpoint =
            !args.checkpoint.empty()
                ? args.checkpoint
                : (std::filesystem::path(cfg.get_string("out.dir")) / "model.ckpt").string();

        if (args.command == "train") return aura::cli::cmd_train(cfg, std::cout);
        if (args.command == "eval") return aura::cli::cmd_eval(cfg, checkpoint, std::cout);
        if (args.command == "detect") return aura::cli::cmd_detect(cfg, checkpoint, std::cout);
        if (args.command == "ablate") return aura::cli::cmd_ablate(cfg, std::cout);
        if (args.command == "gates") return aura::cli::cmd_gates(cfg, checkpoint, std::cout);
        if (args.command == "generate") return aura::cli::cmd_generate(cfg, std::cout);
        if (args.command == "plot") return aura::cli::cmd_plot(cfg, args.positional, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

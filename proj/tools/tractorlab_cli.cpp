// tractorlab command-line front end; talks to the library only through tractorlab.h.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tractorlab.h"

namespace {

bool read_file(const std::string& path, std::string& out) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        out = ss.str();
        return true;
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    std::ostringstream ss;
    ss << f.rdbuf();
    out = ss.str();
    return true;
}

bool write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return true;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) return false;
    f << text;
    return (bool)f;
}

int die(int code, const std::string& msg) {
    std::fprintf(stderr, "tractorlab: %s: %s\n", tl_status_name((tl_status)code), msg.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tractorlab: conformal submanifold geometry via tractor calculus"};
    app.require_subcommand(1, 1);
    std::string config_path, format, out_path, csv_path, preset;
    std::vector<std::string> sets;
    int threads = 1;
    app.add_option("-c,--config", config_path, "JSON config file ('-' for stdin)");
    app.add_option("-s,--set", sets, "override a dotted config path: key.sub=VALUE (VALUE is JSON or a bare string)");
    app.add_option("-t,--threads", threads, "worker threads (TRACTORLAB_THREADS takes precedence)")->check(CLI::PositiveNumber);
    app.add_option("-f,--format", format, "json or csv (default: output.format or json)")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("-o,--out", out_path, "write the primary output here instead of stdout");
    app.add_option("--csv-out", csv_path, "also write the CSV table here");
    app.fallthrough();
    for (auto [name, help] : {std::pair{"report", "classification report for an embedding"},
                              std::pair{"circle", "integrate a conformal circle"},
                              std::pair{"invariance", "conformal rescaling residuals and verdict stability"},
                              std::pair{"scan", "zero-locus scan of a conformal Killing-Yano form"},
                              std::pair{"residuals", "theorem, Gauss-Codazzi-Ricci and connection residuals"}}) {
        auto* sub = app.add_subcommand(name, help);
        if (std::string(name) == "circle")
            sub->add_option("--preset", preset, "flat-circle or sphere-great-circle");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return TL_ERR_SCHEMA;
    }
    std::string command = app.get_subcommands().front()->get_name();

    if (const char* env = std::getenv("TRACTORLAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (!*env || *end || v < 1 || v > 4096) return die(TL_ERR_SCHEMA, "TRACTORLAB_THREADS must be a positive integer");
        threads = (int)v;
    }

    std::string text = "{\"version\": 1}";
    if (!config_path.empty() && !read_file(config_path, text)) return die(TL_ERR_SCHEMA, "cannot read " + config_path);
    tl_config* cfg = nullptr;
    int st = tl_config_create(text.c_str(), &cfg);
    if (st != TL_OK) return die(st, tl_last_error());
    if (!preset.empty()) sets.insert(sets.begin(), "circle.preset=" + preset);
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            tl_config_free(cfg);
            return die(TL_ERR_SCHEMA, "override '" + s + "' needs key=value");
        }
        st = tl_config_set(cfg, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str());
        if (st != TL_OK) {
            tl_config_free(cfg);
            return die(st, tl_last_error());
        }
    }
    if (format.empty()) {
        std::string f = tl_config_get(cfg, "output.format");
        format = f == "\"csv\"" ? "csv" : "json";
    }

    tl_result* res = nullptr;
    st = tl_run(cfg, command.c_str(), threads, &res);
    std::string err = st == TL_OK ? "" : tl_last_error();
    tl_config_free(cfg);
    if (res) {
        std::string primary = format == "csv" ? tl_result_csv(res) : tl_result_json(res);
        bool ok = write_text(out_path, primary);
        if (ok && !csv_path.empty()) ok = write_text(csv_path, tl_result_csv(res));
        tl_result_free(res);
        if (!ok) return die(TL_ERR_SCHEMA, "cannot write output");
    }
    if (st != TL_OK) return die(st, err);
    return 0;
}

// C API and CLI tests; links only the shared library.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "tractorlab.h"

using nlohmann::json;

namespace {

struct Run {
    tl_status st = TL_ERR_INTERNAL;
    std::string out, csv;
};

Run run(const std::string& cfg, const char* cmd, int threads = 1) {
    Run r;
    tl_config* c = nullptr;
    r.st = tl_config_create(cfg.c_str(), &c);
    if (r.st != TL_OK) return r;
    tl_result* res = nullptr;
    r.st = tl_run(c, cmd, threads, &res);
    if (res) {
        r.out = tl_result_json(res);
        r.csv = tl_result_csv(res);
        tl_result_free(res);
    }
    tl_config_free(c);
    return r;
}

const std::string kCP1 = R"({"version":1,"geometry":{"name":"fubini_study"},"embedding":{"name":"cp1_slice"}})";
const std::string kTwisted =
    R"({"version":1,"geometry":{"name":"twisted_example"},
        "embedding":{"name":"coordinate_slice","params":{"free":[0,1],"fixed":[0,0]}}})";

// runs the CLI through the shell, returns its exit status; stdout lands in *out
int cli(const std::string& args, std::string* out = nullptr, const std::string& env = "") {
    std::string cmd = env + " '" TL_CLI_PATH "' " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::string s;
    char buf[4096];
    size_t k;
    while ((k = fread(buf, 1, sizeof buf, p)) > 0) s.append(buf, k);
    int st = pclose(p);
    if (out) *out = s;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("capi: version and catalog") {
    CHECK(std::string(tl_version()).size() > 0);
    std::string g = tl_catalog("geometry");
    CHECK(g.find("euclidean\n") != std::string::npos);
    CHECK(g.find("fubini_study\n") != std::string::npos);
    CHECK(std::string(tl_catalog("ky")).find("rotation\n") != std::string::npos);
    CHECK(std::string(tl_catalog("nothing")).empty());
    CHECK(std::string(tl_status_name(TL_ERR_SCHEMA)).size() > 0);
}

TEST_CASE("capi: config validation") {
    tl_config* c = nullptr;
    CHECK(tl_config_create("{", &c) == TL_ERR_SCHEMA);
    CHECK(std::string(tl_last_error()).size() > 0);
    CHECK(tl_config_create(R"({"version":2})", &c) == TL_ERR_SCHEMA);
    CHECK(tl_config_create(R"({"geometry":{"name":"sphere"}})", &c) == TL_ERR_SCHEMA);
    CHECK(tl_config_create(R"({"version":1,"bogus":1})", &c) == TL_ERR_SCHEMA);
    REQUIRE(tl_config_create(R"({"version":1})", &c) == TL_OK);
    CHECK(tl_config_set(c, "geometry.name", "sphere") == TL_OK);
    CHECK(tl_config_set(c, "geometry.params.n", "3") == TL_OK);
    CHECK(std::string(tl_config_get(c, "geometry.name")) == "\"sphere\"");
    CHECK(std::string(tl_config_get(c, "geometry.params.n")) == "3");
    CHECK(std::string(tl_config_get(c, "circle.t_end")).empty());
    CHECK(tl_config_set(c, "nonsense.key", "1") == TL_ERR_SCHEMA);
    tl_result* r = nullptr;
    CHECK(tl_run(c, "frobnicate", 1, &r) == TL_ERR_SCHEMA);
    CHECK(tl_run(c, "report", 0, &r) == TL_ERR_SCHEMA);
    tl_config_free(c);
}

TEST_CASE("capi: report golden values") {
    auto flat = run(R"({"version":1,"geometry":{"name":"euclidean","params":{"n":3}},
                        "embedding":{"name":"hyperplane","params":{"offset":0.5}}})",
                    "report");
    REQUIRE(flat.st == TL_OK);
    auto j = json::parse(flat.out);
    for (auto& [k, v] : j["max"].items()) CHECK_MESSAGE(v.get<double>() < 1e-10, k);
    for (auto& s : j["samples"]) {
        for (auto& [k, v] : s["gcr"].items()) CHECK(v.get<double>() < 1e-10);
        CHECK(s["tractor_gcr"]["available"] == true);
    }
    CHECK(j["verdicts"]["distinguished"] == true);

    auto cp = run(kCP1, "report");
    REQUIRE(cp.st == TL_OK);
    j = json::parse(cp.out);
    CHECK(std::fabs(j["fialkow_coefficient"].get<double>() + 1.0) < 1e-5);
    CHECK(j["verdicts"]["umbilic"] == true);
    CHECK(j["verdicts"]["distinguished"] == true);

    auto tw = run(kTwisted, "report");
    REQUIRE(tw.st == TL_OK);
    j = json::parse(tw.out);
    CHECK(j["verdicts"]["umbilic"] == true);
    CHECK(j["verdicts"]["distinguished"] == false);
    CHECK(tw.csv.rfind("q1,q2,", 0) == 0);
}

TEST_CASE("capi: deterministic output") {
    auto a = run(kCP1, "report", 1), b = run(kCP1, "report", 1), c = run(kCP1, "report", 4);
    REQUIRE(a.st == TL_OK);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    CHECK(a.csv == c.csv);
    CHECK(a.out.back() == '\n');
    CHECK(a.out.find('\r') == std::string::npos);
    auto r1 = run(kCP1, "residuals", 1), r2 = run(kCP1, "residuals", 3);
    REQUIRE(r1.st == TL_OK);
    CHECK(r1.out == r2.out);
}

TEST_CASE("capi: invariance with trivial rescaling") {
    auto r = run(R"({"version":1,"geometry":{"name":"fubini_study"},"embedding":{"name":"cp1_slice"},
                     "invariance":{"omega":{"b":0,"c":[0,0,0,0],"Q":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}}})",
                 "invariance");
    REQUIRE(r.st == TL_OK);
    auto j = json::parse(r.out);
    for (auto& [k, v] : j["max"].items()) CHECK_MESSAGE(v.get<double>() < 1e-14, k);
    auto rnd = run(kCP1, "invariance");
    REQUIRE(rnd.st == TL_OK);
    j = json::parse(rnd.out);
    for (auto& [k, v] : j["max"].items()) CHECK_MESSAGE(v.get<double>() < 1e-5, k);
    for (auto& s : j["rescalings"]) CHECK(s["verdicts_equal"] == true);
}

TEST_CASE("capi: circle presets and failures") {
    auto fc = run(R"({"version":1,"circle":{"preset":"flat-circle"}})", "circle");
    REQUIRE(fc.st == TL_OK);
    auto j = json::parse(fc.out);
    CHECK(j["circle_endpoint_error"].get<double>() < 1e-7);
    CHECK(j["max_conserved_drift"].get<double>() < 1e-7);
    auto sg = run(R"({"version":1,"circle":{"preset":"sphere-great-circle"}})", "circle");
    REQUIRE(sg.st == TL_OK);
    CHECK(json::parse(sg.out)["on_great_circle_residual"].get<double>() < 1e-6);

    auto zero = run(R"({"version":1,"circle":{"preset":"flat-circle","u":[0,0,0]}})", "circle");
    CHECK(zero.st == TL_ERR_NUMERIC);
    CHECK(std::string(tl_last_error()).size() > 0);
    CHECK(run(R"({"version":1,"circle":{"preset":"square"}})", "circle").st == TL_ERR_UNKNOWN_NAME);
    CHECK(run(R"({"version":1,"geometry":{"name":"klein_bottle"}})", "report").st == TL_ERR_UNKNOWN_NAME);
    CHECK(run(R"({"version":1,"geometry":{"name":"sphere","params":{"n":3,"radius":2,"colour":1}}})", "report").st ==
          TL_ERR_SCHEMA);
}

TEST_CASE("cli: exit codes") {
    std::string out;
    CHECK(cli("report -s geometry.name=fubini_study -s embedding.name=cp1_slice", &out) == 0);
    CHECK(json::parse(out)["command"] == "report");
    CHECK(cli("circle --preset flat-circle -s circle.u=[0,0,0]") == 2);
    CHECK(cli("report -s geometry.name=no_such_space") == 3);
    CHECK(cli("report -s bogus=1") == 4);
    CHECK(cli("report -s version=2") == 4);
    CHECK(cli("report --no-such-flag") == 4);
    CHECK(cli("report -c /nonexistent/config.json") == 4);
}

TEST_CASE("cli: byte-identical output, threads override, csv quoting") {
    const std::string args = "report -s geometry.name=s2s2 -s embedding.name=s2s2_diagonal";
    std::string a, b, c, d;
    REQUIRE(cli(args, &a) == 0);
    REQUIRE(cli(args, &b) == 0);
    REQUIRE(cli(args + " --threads 3", &c) == 0);
    REQUIRE(cli(args, &d, "TRACTORLAB_THREADS=2") == 0);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a == d);
    CHECK(cli(args, nullptr, "TRACTORLAB_THREADS=zero") == 4);
    CHECK(cli(args + " --threads 2", nullptr, "TRACTORLAB_THREADS=0") == 4);

    // config file plus overrides, same result as pure overrides
    std::string path = "tl_test_cfg.json";
    std::ofstream(path) << R"({"version":1,"geometry":{"name":"s2s2"},"embedding":{"name":"s2s2_diagonal"}})";
    std::string e;
    REQUIRE(cli("report -c " + path, &e) == 0);
    CHECK(a == e);
    std::remove(path.c_str());

    std::string csv;
    REQUIRE(cli("circle --preset flat-circle -f csv -s 'circle.monitors=[{\"name\":\"rotation\","
                "\"params\":{\"i\":0,\"j\":1},\"label\":\"rot \\\"x,y\\\"\"}]'",
                &csv) == 0);
    auto eol = csv.find("\r\n");
    REQUIRE(eol != std::string::npos);
    std::string header = csv.substr(0, eol);
    const std::string want = ",\"rot \"\"x,y\"\"\"";
    REQUIRE(header.size() > want.size());
    CHECK(header.substr(header.size() - want.size()) == want);
}

// extern "C" surface over the core library; all commands are dispatched here.
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "circles.hpp"
#include "firstint.hpp"
#include "geolib.hpp"
#include "invariance.hpp"
#include "json.hpp"
#include "subtractor.hpp"
#include "tractorlab.h"

using json = nlohmann::json;
namespace gl = tl::geolib;

struct tl_config {
    json doc;
    std::string text;
    mutable std::string scratch;
};

struct tl_result {
    std::string json_text, csv_text;
};

namespace {

thread_local std::string g_last_error;

struct Failure {
    tl_status code;
    std::string msg;
};

[[noreturn]] void schema(const std::string& m) { throw Failure{TL_ERR_SCHEMA, m}; }

// ---- output formatting ----

std::string num(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    std::string s = buf;
    if (s == "-0") s = "0";
    return s;
}

void write_json(std::string& out, const json& j, int level) {
    auto pad = [&](int l) { out.append(2 * l, ' '); };
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                pad(level + 1);
                out += json(it.key()).dump();
                out += ": ";
                write_json(out, it.value(), level + 1);
                out += i + 1 < j.size() ? ",\n" : "\n";
            }
            pad(level);
            out += "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool flat = true;
            for (auto& e : j) flat = flat && !e.is_structured();
            if (flat) {
                out += "[";
                for (size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    write_json(out, j[i], level + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (size_t i = 0; i < j.size(); ++i) {
                pad(level + 1);
                write_json(out, j[i], level + 1);
                out += i + 1 < j.size() ? ",\n" : "\n";
            }
            pad(level);
            out += "]";
            return;
        }
        case json::value_t::number_float: out += num(j.get<double>()); return;
        default: out += j.dump(); return;
    }
}

std::string dump(const json& j) {
    std::string s;
    write_json(s, j, 0);
    return s + "\n";
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char c : s) {
        if (c == '"') r += '"';
        r += c;
    }
    return r + "\"";
}

struct Csv {
    std::ostringstream os;
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
        os << "\r\n";
    }
};

std::vector<std::string> with_prefix(const std::string& p, int n) {
    std::vector<std::string> r;
    for (int i = 1; i <= n; ++i) r.push_back(p + std::to_string(i));
    return r;
}

// ---- schema ----

struct Node {
    std::map<std::string, Node> kids;
    bool open = false;  // contents validated elsewhere (catalog params)
};

Node obj(std::initializer_list<std::pair<const std::string, Node>> k) { return Node{k, false}; }
Node leaf() { return Node{}; }
Node open_node() { return Node{{}, true}; }

const Node& schema_root() {
    static const Node named = obj({{"name", leaf()}, {"params", open_node()}});
    static const Node root = obj({
        {"version", leaf()},
        {"geometry", named},
        {"embedding", named},
        {"backend", obj({{"mode", leaf()}, {"step", leaf()}, {"step3", leaf()}, {"max_order", leaf()}})},
        {"samples", leaf()},
        {"tolerance", leaf()},
        {"seed", leaf()},
        {"circle", obj({{"preset", leaf()}, {"x", leaf()}, {"u", leaf()}, {"a", leaf()}, {"t0", leaf()},
                        {"t_end", leaf()}, {"atol", leaf()}, {"rtol", leaf()}, {"h0", leaf()}, {"hmin", leaf()},
                        {"hmax", leaf()}, {"adaptive", leaf()}, {"sample_dt", leaf()}, {"max_steps", leaf()},
                        {"transport", leaf()}, {"monitors", leaf()}})},
        {"invariance", obj({{"omega", obj({{"b", leaf()}, {"c", leaf()}, {"Q", leaf()}})},
                            {"random", obj({{"count", leaf()}, {"amplitude", leaf()}})}})},
        {"scan", obj({{"ky", named}, {"lo", leaf()}, {"hi", leaf()}, {"grid", leaf()}, {"refine_tol", leaf()},
                      {"max_points", leaf()}})},
        {"output", obj({{"format", leaf()}})},
    });
    return root;
}

void validate(const json& j, const Node& node, const std::string& where) {
    if (node.open || node.kids.empty()) return;
    if (!j.is_object()) schema(where + ": expected an object");
    for (auto& [k, v] : j.items()) {
        auto it = node.kids.find(k);
        if (it == node.kids.end()) schema("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
        validate(v, it->second, where.empty() ? k : where + "." + k);
    }
}

void validate_doc(const json& doc) {
    if (!doc.is_object()) schema("config must be a JSON object");
    if (!doc.contains("version")) schema("missing 'version'");
    if (!doc["version"].is_number_integer() || doc["version"].get<long>() != 1) schema("'version' must be 1");
    validate(doc, schema_root(), "");
    if (doc.contains("output") && doc["output"].contains("format")) {
        auto f = doc["output"]["format"];
        if (!f.is_string() || (f != "json" && f != "csv")) schema("output.format must be \"json\" or \"csv\"");
    }
}

template <class T>
T get_or(const json& j, const char* key, T def, const std::string& where) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        schema(where + "." + key + ": wrong type");
    }
}

// ---- config pieces ----

tl::DiffBackend backend_of(const json& doc) {
    json b = doc.value("backend", json::object());
    std::string mode = get_or<std::string>(b, "mode", "analytic", "backend");
    if (mode == "analytic") return tl::DiffBackend::analytic(get_or<int>(b, "max_order", 5, "backend"));
    if (mode == "fd") {
        auto be = tl::DiffBackend::fd(get_or<double>(b, "step", 1e-3, "backend"), get_or<double>(b, "step3", 1e-2, "backend"));
        if (!(be.step > 0) || !(be.step3 > 0)) schema("backend steps must be positive");
        return be;
    }
    schema("backend.mode must be \"analytic\" or \"fd\"");
}

std::pair<std::string, json> named(const json& doc, const char* key, const std::string& where) {
    if (!doc.contains(key)) schema(where + ": missing '" + key + "'");
    const json& g = doc.at(key);
    if (!g.is_object() || !g.contains("name") || !g["name"].is_string()) schema(where + "." + key + ".name must be a string");
    return {g["name"].get<std::string>(), g.value("params", json::object())};
}

tl::Geometry geometry_of(const json& doc) {
    auto [name, params] = named(doc, "geometry", "config");
    return gl::geometry_by_name(name, params, backend_of(doc));
}

tl::Embedding embedding_of(const json& doc, int n) {
    auto [name, params] = named(doc, "embedding", "config");
    return gl::embedding_by_name(name, params, n);
}

unsigned seed_of(const json& doc) { return get_or<unsigned>(doc, "seed", 1u, "config"); }

std::vector<tl::Point> samples_of(const json& doc, int m) {
    std::vector<tl::Point> qs;
    if (doc.contains("samples")) {
        try {
            qs = doc["samples"].get<std::vector<tl::Point>>();
        } catch (const json::exception&) {
            schema("samples must be an array of coordinate arrays");
        }
        if (qs.empty()) schema("samples must not be empty");
        for (auto& q : qs)
            if ((int)q.size() != m) schema("each sample needs " + std::to_string(m) + " coordinates");
        return qs;
    }
    std::mt19937_64 rng(seed_of(doc));
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int i = 0; i < 3; ++i) {
        tl::Point q(m);
        for (auto& x : q) x = u(rng);
        qs.push_back(q);
    }
    return qs;
}

std::vector<double> vec(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<std::vector<double>>();
    } catch (const json::exception&) {
        schema(where + "." + key + " must be a numeric array");
    }
}

void parallel_for(size_t count, int threads, const std::function<void(size_t)>& f) {
    threads = std::max(1, std::min<int>(threads, (int)count));
    if (threads == 1) {
        for (size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errs(count);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (size_t i = t; i < count; i += threads) {
                try {
                    f(i);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

json point(const tl::Point& p) { return json(p); }

// ---- commands ----

json verdicts(const tl::ClassificationReport& r) {
    return {{"umbilic", r.umbilic},
            {"distinguished", r.distinguished},
            {"conformally_circular", r.cc},
            {"strongly_conformally_circular", r.scc}};
}

json gcr_json(const tl::GcrResiduals& g) { return {{"gauss", g.gauss}, {"codazzi", g.codazzi}, {"ricci", g.ricci}}; }

json tgcr_json(const tl::TractorGcr& g) {
    json j = {{"available", g.available}};
    if (g.available) {
        j["gauss"] = g.gauss;
        j["codazzi"] = g.codazzi;
        j["ricci"] = g.ricci;
    }
    return j;
}

tl_result run_report(const json& doc, int threads) {
    auto geo = geometry_of(doc);
    auto emb = embedding_of(doc, geo.n);
    auto qs = samples_of(doc, emb.m);
    std::optional<double> tol;
    if (doc.contains("tolerance")) tol = get_or<double>(doc, "tolerance", 0.0, "config");
    auto rep = tl::classify(geo, emb, qs, tol);
    std::vector<tl::GcrResiduals> gcr(qs.size());
    std::vector<tl::TractorGcr> tg(qs.size());
    parallel_for(qs.size(), threads, [&](size_t i) {
        gcr[i] = tl::gauss_codazzi_ricci_residuals(geo, emb, qs[i]);
        tg[i] = tl::tractor_gcr_residuals(geo, emb, qs[i]);
    });
    json samples = json::array();
    double fc = 0;
    Csv csv;
    csv.row([&] {
        auto h = with_prefix("q", emb.m);
        for (auto s : {"IIo", "H", "mu", "F", "F_tracefree", "L", "S", "fialkow_coefficient"}) h.push_back(s);
        return h;
    }());
    for (size_t i = 0; i < qs.size(); ++i) {
        const auto& s = rep.samples[i];
        fc += s.fialkow_coefficient / qs.size();
        samples.push_back({{"q", point(qs[i])},
                           {"x", point(emb.map.valfn(qs[i]))},
                           {"IIo", s.IIo},
                           {"H", s.H},
                           {"II", s.II},
                           {"mu", s.mu},
                           {"F", s.F},
                           {"F_tracefree", s.F_tracefree},
                           {"L", s.L},
                           {"S", s.S},
                           {"P", s.P},
                           {"fialkow_coefficient", s.fialkow_coefficient},
                           {"gcr", gcr_json(gcr[i])},
                           {"tractor_gcr", tgcr_json(tg[i])}});
        std::vector<std::string> row;
        for (double x : qs[i]) row.push_back(num(x));
        for (double v : {s.IIo, s.H, s.mu, s.F, s.F_tracefree, s.L, s.S, s.fialkow_coefficient}) row.push_back(num(v));
        csv.row(row);
    }
    json out = {{"command", "report"},
                {"geometry", geo.name},
                {"embedding", emb.name},
                {"dimension", geo.n},
                {"submanifold_dimension", emb.m},
                {"backend", geo.backend.mode == tl::DiffMode::fd ? "fd" : "analytic"},
                {"samples", samples},
                {"tol", rep.tol},
                {"scale", rep.scale},
                {"fialkow_coefficient", fc},
                {"max", {{"IIo", rep.max_IIo}, {"mu", rep.max_mu}, {"F", rep.max_F}, {"F_tracefree", rep.max_F_tracefree},
                         {"L", rep.max_L}, {"S", rep.max_S}}},
                {"verdicts", verdicts(rep)}};
    return {dump(out), csv.os.str()};
}

tl_result run_residuals(const json& doc, int threads) {
    auto geo = geometry_of(doc);
    auto emb = embedding_of(doc, geo.n);
    auto qs = samples_of(doc, emb.m);
    unsigned seed = seed_of(doc);
    std::vector<tl::TheoremResiduals> th(qs.size());
    std::vector<tl::GcrResiduals> gcr(qs.size());
    std::vector<tl::TractorGcr> tg(qs.size());
    std::vector<double> chk(qs.size());
    parallel_for(qs.size(), threads, [&](size_t i) {
        th[i] = tl::theorem_residuals(geo, emb, qs[i]);
        gcr[i] = tl::gauss_codazzi_ricci_residuals(geo, emb, qs[i]);
        tg[i] = tl::tractor_gcr_residuals(geo, emb, qs[i]);
        chk[i] = tl::checked_connection_residual(geo, emb, qs[i], seed + (unsigned)i);
    });
    json samples = json::array();
    Csv csv;
    csv.row([&] {
        auto h = with_prefix("q", emb.m);
        for (auto s : {"L", "nabla_N_projector", "nabla_N_form", "nabla_star_N", "gauss", "codazzi", "ricci",
                       "checked_connection"})
            h.push_back(s);
        return h;
    }());
    double worst = 0;
    for (size_t i = 0; i < qs.size(); ++i) {
        json t = {{"L", th[i].L},
                  {"nabla_N_projector", th[i].nablaNproj},
                  {"nabla_N_form", th[i].nablaNform},
                  {"nabla_star_N", th[i].nablaStar}};
        worst = std::max({worst, th[i].L, th[i].nablaNproj, th[i].nablaNform, th[i].nablaStar});
        samples.push_back({{"q", point(qs[i])},
                           {"theorem", t},
                           {"gcr", gcr_json(gcr[i])},
                           {"tractor_gcr", tgcr_json(tg[i])},
                           {"checked_connection", chk[i]}});
        std::vector<std::string> row;
        for (double x : qs[i]) row.push_back(num(x));
        for (double v : {th[i].L, th[i].nablaNproj, th[i].nablaNform, th[i].nablaStar, gcr[i].gauss, gcr[i].codazzi,
                         gcr[i].ricci, chk[i]})
            row.push_back(num(v));
        csv.row(row);
    }
    json out = {{"command", "residuals"},  {"geometry", geo.name}, {"embedding", emb.name},
                {"samples", samples},      {"max_theorem_residual", worst}};
    return {dump(out), csv.os.str()};
}

tl_result run_circle(json doc, int) {
    json c = doc.value("circle", json::object());
    std::string preset = get_or<std::string>(c, "preset", "", "circle");
    json defaults;
    if (preset == "flat-circle") {
        defaults = {{"x", {1.0, 0.0, 0.0}}, {"u", {0.0, 1.0, 0.0}}, {"a", {-1.0, 0.0, 0.0}}, {"t_end", 2 * M_PI},
                    {"monitors", json::array({{{"name", "rotation"}, {"params", {{"i", 0}, {"j", 1}}}},
                                              {{"name", "rotation"}, {"params", {{"i", 1}, {"j", 2}}}},
                                              {{"name", "rotation"}, {"params", {{"i", 0}, {"j", 2}}}}})}};
        if (!doc.contains("geometry")) doc["geometry"] = {{"name", "euclidean"}, {"params", {{"n", 3}}}};
    } else if (preset == "sphere-great-circle") {
        defaults = {{"x", {1.0, 0.0, 0.0}}, {"u", {0.0, 1.0, 0.0}}, {"a", {0.0, 0.0, 0.0}}, {"t_end", 5.0},
                    {"sample_dt", 0.05}};
        if (!doc.contains("geometry")) doc["geometry"] = {{"name", "sphere"}, {"params", {{"n", 3}}}};
    } else if (!preset.empty()) {
        throw Failure{TL_ERR_UNKNOWN_NAME, "unknown circle preset: " + preset};
    }
    for (auto& [k, v] : defaults.items())
        if (!c.contains(k)) c[k] = v;
    auto geo = geometry_of(doc);
    for (auto key : {"x", "u", "a"}) {
        if (!c.contains(key)) schema(std::string("circle.") + key + " is required");
        if ((int)vec(c, key, "circle").size() != geo.n) schema(std::string("circle.") + key + " needs n entries");
    }
    if (!c.contains("t_end")) schema("circle.t_end is required");
    tl::CurveState s{vec(c, "x", "circle"), vec(c, "u", "circle"), vec(c, "a", "circle"),
                     get_or<double>(c, "t0", 0.0, "circle")};
    tl::CircleOptions o;
    o.atol = get_or<double>(c, "atol", o.atol, "circle");
    o.rtol = get_or<double>(c, "rtol", o.rtol, "circle");
    o.h0 = get_or<double>(c, "h0", o.h0, "circle");
    o.hmin = get_or<double>(c, "hmin", o.hmin, "circle");
    o.hmax = get_or<double>(c, "hmax", o.hmax, "circle");
    o.adaptive = get_or<bool>(c, "adaptive", true, "circle");
    o.sample_dt = get_or<double>(c, "sample_dt", 0.0, "circle");
    o.max_steps = get_or<size_t>(c, "max_steps", o.max_steps, "circle");
    o.transport = get_or<bool>(c, "transport", true, "circle");
    double t_end = get_or<double>(c, "t_end", 0.0, "circle");
    std::vector<tl::CurveMonitor> mons;
    std::vector<std::string> names;
    json mj = c.value("monitors", json::array());
    if (!mj.is_array()) schema("circle.monitors must be an array");
    for (size_t i = 0; i < mj.size(); ++i) {
        const json& m = mj[i];
        if (!m.is_object() || !m.contains("name") || !m["name"].is_string()) schema("circle.monitors entries need a name");
        for (auto& [k, v] : m.items())
            if (k != "name" && k != "params" && k != "label") schema("unknown key 'circle.monitors." + k + "'");
        auto ky = gl::ky_by_name(m["name"], m.value("params", json::object()), geo.n);
        mons.push_back(tl::ky_monitor(geo, ky));
        names.push_back(m.value("label", m["name"].get<std::string>() + "_" + std::to_string(i + 1)));
    }
    auto tr = tl::integrate_circle(geo, s, t_end, o, mons);
    const auto& last = tr.samples.back().s;
    json cons = json::array();
    for (size_t i = 0; i < mons.size(); ++i) {
        double lo = INFINITY, hi = -INFINITY;
        for (auto& smp : tr.samples) {
            lo = std::min(lo, smp.conserved[i]);
            hi = std::max(hi, smp.conserved[i]);
        }
        cons.push_back({{"name", names[i]},
                        {"initial", tr.samples.front().conserved[i]},
                        {"min", lo},
                        {"max", hi},
                        {"drift", tr.conserved_drift[i]}});
    }
    json out = {{"command", "circle"},
                {"geometry", geo.name},
                {"preset", preset.empty() ? json(nullptr) : json(preset)},
                {"status", tr.status},
                {"message", tr.message},
                {"accepted_steps", tr.accepted},
                {"rejected_steps", tr.rejected},
                {"samples", tr.samples.size()},
                {"final", {{"t", last.t}, {"x", last.x}, {"u", last.u}, {"a", last.a}}},
                {"AdotA_drift", tr.AdotA_drift},
                {"max_unparam_residual", tr.max_unparam},
                {"max_phi_transport_residual", tr.max_phi_drift},
                {"conserved", cons}};
    double maxdrift = 0;
    for (double d : tr.conserved_drift) maxdrift = std::max(maxdrift, d);
    out["max_conserved_drift"] = maxdrift;
    // closed-form flat circle with a perpendicular to u
    if (geo.name == "euclidean") {
        double uu = 0, aa = 0, ua = 0;
        for (int i = 0; i < geo.n; ++i) {
            uu += s.u[i] * s.u[i];
            aa += s.a[i] * s.a[i];
            ua += s.u[i] * s.a[i];
        }
        if (aa > 0 && std::fabs(ua) < 1e-14 * std::sqrt(uu * aa) + 1e-300) {
            double R = uu / std::sqrt(aa), sp = std::sqrt(uu);
            double th = 2 * std::atan(sp * (last.t - s.t) / (2 * R));
            double err = 0;
            for (int i = 0; i < geo.n; ++i) {
                double cen = s.x[i] + R * s.a[i] / std::sqrt(aa);
                double e1 = (s.x[i] - cen) / R, e2 = s.u[i] / sp;
                double ex = cen + R * (std::cos(th) * e1 + std::sin(th) * e2);
                err = std::max(err, std::fabs(last.x[i] - ex));
            }
            out["circle_endpoint_error"] = err;
            out["circle_radius"] = R;
        }
    }
    // distance from the great circle through x0 with direction u0 (stereographic chart)
    if (geo.name == "sphere") {
        int n = geo.n;
        auto lift = [n](const tl::Point& x) {
            double r2 = 0;
            for (double v : x) r2 += v * v;
            std::vector<double> X(n + 1);
            for (int i = 0; i < n; ++i) X[i] = 2 * x[i] / (1 + r2);
            X[n] = (r2 - 1) / (1 + r2);
            return X;
        };
        auto X0 = lift(s.x);
        std::vector<double> T(n + 1);
        double eps = 1e-6;
        tl::Point xp = s.x, xm = s.x;
        for (int i = 0; i < n; ++i) {
            xp[i] += eps * s.u[i];
            xm[i] -= eps * s.u[i];
        }
        auto Xp = lift(xp), Xm = lift(xm);
        double t0 = 0, tt = 0;
        for (int i = 0; i <= n; ++i) T[i] = Xp[i] - Xm[i];
        for (int i = 0; i <= n; ++i) t0 += T[i] * X0[i];
        for (int i = 0; i <= n; ++i) T[i] -= t0 * X0[i];
        for (double v : T) tt += v * v;
        for (auto& v : T) v /= std::sqrt(tt);
        double worst = 0;
        for (auto& smp : tr.samples) {
            auto X = lift(smp.s.x);
            double a = 0, b = 0, r = 0;
            for (int i = 0; i <= n; ++i) {
                a += X[i] * X0[i];
                b += X[i] * T[i];
            }
            for (int i = 0; i <= n; ++i) r += std::pow(X[i] - a * X0[i] - b * T[i], 2);
            worst = std::max(worst, std::sqrt(r));
        }
        out["on_great_circle_residual"] = worst;
    }
    if (tr.status != "ok") {
        tl_result r{dump(out), tl::trajectory_csv(tr, names)};
        throw std::pair<tl_result, std::string>(r, tr.message);
    }
    return {dump(out), tl::trajectory_csv(tr, names)};
}

tl_result run_invariance(const json& doc, int threads) {
    auto geo = geometry_of(doc);
    bool has_emb = doc.contains("embedding");
    tl::Embedding emb;
    if (has_emb) emb = embedding_of(doc, geo.n);
    auto qs = samples_of(doc, has_emb ? emb.m : geo.n);
    std::optional<double> tol;
    if (doc.contains("tolerance")) tol = get_or<double>(doc, "tolerance", 0.0, "config");
    json inv = doc.value("invariance", json::object());
    std::vector<gl::ExpQuadratic> oms;
    if (inv.contains("omega")) {
        json o = inv["omega"];
        gl::ExpQuadratic w;
        w.b = get_or<double>(o, "b", 0.0, "invariance.omega");
        w.c = get_or<std::vector<double>>(o, "c", std::vector<double>(geo.n, 0.0), "invariance.omega");
        w.Q = get_or<std::vector<double>>(o, "Q", {}, "invariance.omega");
        if ((int)w.c.size() != geo.n) schema("invariance.omega.c needs n entries");
        if (!w.Q.empty() && (int)w.Q.size() != geo.n * geo.n) schema("invariance.omega.Q needs n*n entries");
        oms.push_back(w);
    } else {
        json r = inv.value("random", json::object());
        int count = get_or<int>(r, "count", 5, "invariance.random");
        double amp = get_or<double>(r, "amplitude", 0.3, "invariance.random");
        if (count < 1 || count > 1000 || !(amp >= 0)) schema("invariance.random: count in 1..1000, amplitude >= 0");
        for (int i = 0; i < count; ++i) oms.push_back(tl::random_omega(geo.n, seed_of(doc) * 1000 + i, amp));
    }
    std::vector<tl::InvarianceResiduals> res(oms.size());
    parallel_for(oms.size(), threads, [&](size_t i) {
        res[i] = tl::invariance_check(geo, has_emb ? &emb : nullptr, gl::exp_quadratic(geo.n, oms[i]), qs, tol);
    });
    json rows = json::array();
    Csv csv;
    csv.row({"omega", "schouten", "weyl", "second_ff", "tracefree_2ff", "tractor", "tractor_metric", "verdicts_equal"});
    json mx = {{"schouten", 0.0}, {"weyl", 0.0}, {"second_ff", 0.0}, {"tracefree_2ff", 0.0}, {"tractor", 0.0},
               {"tractor_metric", 0.0}};
    bool all_eq = true;
    for (size_t i = 0; i < oms.size(); ++i) {
        auto& r = res[i];
        json resid = {{"schouten", r.schouten}, {"weyl", r.weyl}, {"second_ff", r.second_ff},
                      {"tracefree_2ff", r.tracefree_2ff}, {"tractor", r.tractor}, {"tractor_metric", r.tractor_metric}};
        for (auto& [k, v] : resid.items()) mx[k] = std::max(mx[k].get<double>(), v.get<double>());
        json row = {{"omega", {{"b", oms[i].b}, {"c", oms[i].c}, {"Q", oms[i].Q}}}, {"residuals", resid}};
        if (has_emb) {
            row["verdicts_before"] = verdicts(r.before);
            row["verdicts_after"] = verdicts(r.after);
            row["verdicts_equal"] = r.verdicts_equal;
            all_eq = all_eq && r.verdicts_equal;
        }
        rows.push_back(row);
        csv.row({std::to_string(i + 1), num(r.schouten), num(r.weyl), num(r.second_ff), num(r.tracefree_2ff),
                 num(r.tractor), num(r.tractor_metric), has_emb ? (r.verdicts_equal ? "true" : "false") : ""});
    }
    json out = {{"command", "invariance"}, {"geometry", geo.name}, {"rescalings", rows}, {"max", mx}};
    if (has_emb) {
        out["embedding"] = emb.name;
        out["verdicts_stable"] = all_eq;
    }
    return {dump(out), csv.os.str()};
}

tl_result run_scan(const json& doc, int threads) {
    auto geo = geometry_of(doc);
    if (!doc.contains("scan")) schema("scan section is required");
    json sc = doc["scan"];
    auto [kname, kparams] = named(sc, "ky", "scan");
    auto ky = gl::ky_by_name(kname, kparams, geo.n);
    tl::ScanRegion reg;
    if (!sc.contains("lo") || !sc.contains("hi")) schema("scan.lo and scan.hi are required");
    reg.lo = vec(sc, "lo", "scan");
    reg.hi = vec(sc, "hi", "scan");
    reg.grid = get_or<int>(sc, "grid", 41, "scan");
    if ((int)reg.lo.size() != geo.n || (int)reg.hi.size() != geo.n) schema("scan.lo/hi need n entries");
    if (reg.grid < 2) schema("scan.grid must be >= 2");
    for (int i = 0; i < geo.n; ++i)
        if (!(reg.hi[i] > reg.lo[i])) schema("scan: hi must exceed lo");
    double tol = get_or<double>(sc, "refine_tol", 1e-12, "scan");
    size_t maxp = get_or<size_t>(sc, "max_points", 64, "scan");
    auto rep = tl::zero_locus_scan(geo, ky, reg, tol, threads, maxp);
    json pts = json::array();
    Csv csv;
    csv.row([&] {
        auto h = with_prefix("x", geo.n);
        h.push_back("codim");
        h.push_back("L");
        h.push_back("causal");
        return h;
    }());
    for (auto& p : rep.points) {
        pts.push_back({{"x", p.x},
                       {"codim", p.codim},
                       {"singular_values", p.singular_values},
                       {"L", p.L < 0 ? json(nullptr) : json(p.L)},
                       {"causal", p.causal},
                       {"simple", p.simple}});
        std::vector<std::string> row;
        for (double x : p.x) row.push_back(num(x));
        row.push_back(std::to_string(p.codim));
        row.push_back(p.L < 0 ? "" : num(p.L));
        row.push_back(p.causal);
        csv.row(row);
    }
    json out = {{"command", "scan"},
                {"geometry", geo.name},
                {"ky", {{"name", kname}, {"degree", ky.degree}}},
                {"empty", rep.empty},
                {"short_circuit", rep.short_circuit},
                {"certificate", rep.short_circuit ? json(rep.certificate) : json(nullptr)},
                {"causal", rep.causal},
                {"codim", rep.codim < 0 ? json(nullptr) : json(rep.codim)},
                {"candidates", rep.candidates},
                {"converged", rep.converged},
                {"diverged", rep.diverged},
                {"points", pts}};
    return {dump(out), csv.os.str()};
}

tl_status fail(tl_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <class F>
tl_status guard(F f) {
    try {
        f();
        g_last_error.clear();
        return TL_OK;
    } catch (const Failure& e) {
        return fail(e.code, e.msg);
    } catch (const gl::UnknownName& e) {
        return fail(TL_ERR_UNKNOWN_NAME, e.what());
    } catch (const json::exception& e) {
        return fail(TL_ERR_SCHEMA, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(TL_ERR_SCHEMA, e.what());
    } catch (const std::bad_alloc&) {
        return fail(TL_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(TL_ERR_NUMERIC, e.what());
    } catch (...) {
        return fail(TL_ERR_INTERNAL, "unknown error");
    }
}

json parse_value(const char* v) {
    try {
        return json::parse(v);
    } catch (const json::exception&) {
        return json(std::string(v));
    }
}

}  // namespace

extern "C" {

const char* tl_version(void) { return "1.0.0"; }

tl_status tl_config_create(const char* text, tl_config** out) {
    if (!out) return fail(TL_ERR_INTERNAL, "null output handle");
    *out = nullptr;
    return guard([&] {
        if (!text) schema("null config text");
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            schema(std::string("config is not valid JSON: ") + e.what());
        }
        validate_doc(doc);
        *out = new tl_config{doc, dump(doc), {}};
    });
}

tl_status tl_config_set(tl_config* cfg, const char* path, const char* value) {
    if (!cfg || !path || !value) return fail(TL_ERR_INTERNAL, "null argument");
    return guard([&] {
        std::string p = path;
        if (p.empty()) schema("empty override path");
        json doc = cfg->doc;
        json* cur = &doc;
        size_t start = 0;
        while (true) {
            size_t dot = p.find('.', start);
            std::string key = p.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (key.empty()) schema("bad override path '" + p + "'");
            bool index = key.find_first_not_of("0123456789") == std::string::npos;
            json* next;
            if (cur->is_array() && index) {
                size_t i = std::stoul(key);
                if (i > cur->size()) schema("override index out of range in '" + p + "'");
                if (i == cur->size()) cur->push_back(nullptr);
                next = &(*cur)[i];
            } else {
                if (cur->is_null()) *cur = json::object();
                if (!cur->is_object()) schema("override path '" + p + "' crosses a non-object");
                next = &(*cur)[key];
            }
            if (dot == std::string::npos) {
                *next = parse_value(value);
                break;
            }
            cur = next;
            start = dot + 1;
        }
        validate_doc(doc);
        cfg->doc = std::move(doc);
        cfg->text = dump(cfg->doc);
    });
}

const char* tl_config_get(const tl_config* cfg, const char* path) {
    if (!cfg || !path) return "";
    const json* cur = &cfg->doc;
    std::string p = path;
    size_t start = 0;
    while (true) {
        size_t dot = p.find('.', start);
        std::string key = p.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (cur->is_object() && cur->contains(key)) cur = &(*cur)[key];
        else if (cur->is_array() && !key.empty() && key.find_first_not_of("0123456789") == std::string::npos &&
                 std::stoul(key) < cur->size())
            cur = &(*cur)[std::stoul(key)];
        else return "";
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    cfg->scratch = cur->dump();
    return cfg->scratch.c_str();
}

const char* tl_config_json(const tl_config* cfg) { return cfg ? cfg->text.c_str() : ""; }

void tl_config_free(tl_config* cfg) { delete cfg; }

tl_status tl_run(const tl_config* cfg, const char* command, int threads, tl_result** out) {
    if (!cfg || !command || !out) return fail(TL_ERR_INTERNAL, "null argument");
    *out = nullptr;
    if (threads < 1) return fail(TL_ERR_SCHEMA, "threads must be >= 1");
    tl_result partial;
    tl_status st = guard([&] {
        std::string cmd = command;
        tl_result r;
        try {
            if (cmd == "report") r = run_report(cfg->doc, threads);
            else if (cmd == "residuals") r = run_residuals(cfg->doc, threads);
            else if (cmd == "circle") r = run_circle(cfg->doc, threads);
            else if (cmd == "invariance") r = run_invariance(cfg->doc, threads);
            else if (cmd == "scan") r = run_scan(cfg->doc, threads);
            else throw Failure{TL_ERR_SCHEMA, "unknown command: " + cmd};
        } catch (std::pair<tl_result, std::string>& trunc) {
            // truncated trajectory: keep the partial output, report a numerical failure
            partial = std::move(trunc.first);
            throw Failure{TL_ERR_NUMERIC, trunc.second};
        }
        *out = new tl_result(std::move(r));
    });
    if (st == TL_ERR_NUMERIC && !partial.json_text.empty()) *out = new tl_result(std::move(partial));
    return st;
}

const char* tl_result_json(const tl_result* r) { return r ? r->json_text.c_str() : ""; }
const char* tl_result_csv(const tl_result* r) { return r ? r->csv_text.c_str() : ""; }
void tl_result_free(tl_result* r) { delete r; }

const char* tl_last_error(void) { return g_last_error.c_str(); }

const char* tl_status_name(tl_status s) {
    switch (s) {
        case TL_OK: return "ok";
        case TL_ERR_INTERNAL: return "internal error";
        case TL_ERR_NUMERIC: return "numerical failure";
        case TL_ERR_UNKNOWN_NAME: return "unknown catalog name";
        case TL_ERR_SCHEMA: return "schema error";
    }
    return "unknown status";
}

const char* tl_catalog(const char* kind) {
    static thread_local std::string buf;
    std::vector<std::string> names;
    std::string k = kind ? kind : "";
    if (k == "geometry") names = gl::geometry_names();
    else if (k == "embedding") names = gl::embedding_names();
    else if (k == "ky") names = gl::ky_names();
    buf.clear();
    for (auto& n : names) buf += n + "\n";
    return buf.c_str();
}

}  // extern "C"

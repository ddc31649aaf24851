#include "genfil/cli.hpp"

#include "genfil/experienced.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace genfil::cli {

using nlohmann::json;

namespace {

constexpr int kMaxResolution = 30;
constexpr int kMaxDyadicExponent = 62;

struct Dyadic {
    std::int64_t n = 0;
    int k = 0;  // value n / 2^k
};

Dyadic reduce(Dyadic d) {
    while (d.k > 0 && d.n % 2 == 0) {
        d.n /= 2;
        --d.k;
    }
    return d;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::int64_t parse_count(std::string_view s, const std::string& field) {
    if (!all_digits(s) || s.size() > 18) throw InputError(field, "expected a non-negative integer, got '" + std::string(s) + "'");
    return std::stoll(std::string(s));
}

Dyadic parse_dyadic(const json& v, const std::string& field) {
    if (v.is_number_integer()) {
        const auto n = v.get<std::int64_t>();
        if (n < 0) throw InputError(field, "time must be non-negative");
        return {n, 0};
    }
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (!std::isfinite(x) || x < 0.0) throw InputError(field, "time must be a finite non-negative number");
        for (int k = 0; k <= kMaxDyadicExponent; ++k) {
            const double scaled = std::ldexp(x, k);
            if (scaled >= 0x1p62) break;
            if (scaled == std::floor(scaled)) return reduce({static_cast<std::int64_t>(scaled), k});
        }
        throw InputError(field, fmt::format("time {} is not a dyadic rational", x));
    }
    if (!v.is_string()) throw InputError(field, "time must be a number or a string");

    const std::string s = v.get<std::string>();
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        const std::string num = s.substr(0, slash);
        const std::string den = s.substr(slash + 1);
        const std::int64_t n = parse_count(num, field);
        int k = 0;
        if (den.rfind("2^", 0) == 0) {
            const auto e = parse_count(std::string_view(den).substr(2), field);
            if (e > kMaxDyadicExponent) throw InputError(field, "exponent too large in '" + s + "'");
            k = static_cast<int>(e);
        } else {
            const auto d = parse_count(den, field);
            if (d == 0 || (d & (d - 1)) != 0) throw InputError(field, "denominator of '" + s + "' is not a power of two");
            while ((std::int64_t{1} << k) != d) ++k;
        }
        return reduce({n, k});
    }

    const auto dot = s.find('.');
    const std::string whole = s.substr(0, dot);
    const std::string frac = dot == std::string::npos ? std::string() : s.substr(dot + 1);
    if (!all_digits(whole) || (dot != std::string::npos && !all_digits(frac)) || whole.size() + frac.size() > 17) {
        throw InputError(field, "cannot read '" + s + "' as a time; use \"n/2^k\", \"n/d\" or a decimal");
    }
    std::int64_t pow10 = 1;
    std::int64_t pow5 = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) {
        pow10 *= 10;
        pow5 *= 5;
    }
    const std::int64_t scaled = std::stoll(whole) * pow10 + (frac.empty() ? 0 : std::stoll(frac));
    if (scaled % pow5 != 0) throw InputError(field, "time '" + s + "' is not a dyadic rational");
    return reduce({scaled / pow5, static_cast<int>(frac.size())});
}

GridTime at_resolution(const Dyadic& d, int M, const std::string& field) {
    if (d.k > M) {
        throw InputError(field, fmt::format("time {}/2^{} is not aligned to the 2^-{} grid", d.n, d.k, M));
    }
    const int shift = M - d.k;
    if (d.n > (std::numeric_limits<std::int64_t>::max() >> shift)) throw InputError(field, "time is too large");
    return GridTime(d.n << shift, M);
}

Path parse_path(const std::string& s, const std::string& field) {
    try {
        return Path::parse(s);
    } catch (const Error& e) {
        throw InputError(field, e.what());
    }
}

double get_number(const json& obj, const std::string& key, const std::string& field) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw InputError(field, "missing");
    if (!it->is_number()) throw InputError(field, "expected a number");
    const double x = it->get<double>();
    if (!std::isfinite(x)) throw InputError(field, "expected a finite number");
    return x;
}

double probability(const json& v, const std::string& field) {
    if (!v.is_number()) throw InputError(field, "expected a number");
    const double x = v.get<double>();
    if (!(x >= 0.0 && x <= 1.0)) throw InputError(field, "probability must lie in [0,1]");
    return x;
}

const json& require_object(const json& doc, const std::string& key, const std::string& field) {
    const auto it = doc.find(key);
    if (it == doc.end()) throw InputError(field, "missing");
    if (!it->is_object()) throw InputError(field, "expected an object");
    return *it;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
        const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
        if (!ok) throw InputError(prefix.empty() ? key : prefix + "." + key, "unknown field");
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::string fmt12(double x) { return fmt::format("{:.12g}", x); }

std::vector<GridTime> times_until(int N, const GridTime& horizon) {
    std::vector<GridTime> out;
    for (GridTime t(0, N); t <= horizon; t = t.next()) out.push_back(t);
    return out;
}

double eq_tolerance(const Scenario& sc, const Options& opt) { return opt.tolerance.value_or(sc.tolerances.eq); }

json check_entry(const std::string& name, bool pass, json witnesses) {
    return json{{"name", name}, {"pass", pass}, {"witnesses", std::move(witnesses)}};
}

json report(const Scenario& sc, json checks, json results) {
    return json{{"scenario_hash", sc.hash}, {"checks", std::move(checks)}, {"results", std::move(results)}};
}

ExitCode verdict(const json& checks) {
    for (const auto& c : checks) {
        if (!c.at("pass").get<bool>()) return ExitCode::violations;
    }
    return ExitCode::pass;
}

const ClaimSpec& require_claim(const Scenario& sc, const std::string& command) {
    if (!sc.claim) throw InputError("claim", "the " + command + " command needs a claim");
    return *sc.claim;
}

/// The risk-neutral filtration, or the reason it cannot be built.
struct RnAttempt {
    std::optional<RiskNeutralFiltration> rn;
    std::string reason;
};

RnAttempt try_risk_neutral(const Scenario& sc, const Filtration& F) {
    RnAttempt out;
    if (sc.filtration.kind == "custom") {
        out.reason = "risk-neutral construction supports full and drop filtrations only";
        return out;
    }
    try {
        out.rn.emplace(build_risk_neutral(sc, F));
    } catch (const NoArbitrageBoundError& e) {
        out.reason = e.what();
    }
    return out;
}

RiskNeutralFiltration require_risk_neutral(const Scenario& sc, const Filtration& F) {
    auto attempt = try_risk_neutral(sc, F);
    if (!attempt.rn) throw InputError(sc.filtration.kind == "custom" ? "filtration.kind" : "market", attempt.reason);
    return std::move(*attempt.rn);
}

json q_star_json(const Scenario& sc) {
    if (!sc.market.strictly_inside_bound()) return nullptr;
    const auto q = q_star(sc.market);
    return json{{"q1", num(q.q1)}, {"q0", num(q.q0)}};
}

json strategy_rows(const Strategy& strat, const Filtration& F, const std::vector<std::vector<bool>>* covered) {
    json rows = json::array();
    for (GridTime t(1, F.resolution()); t <= strat.horizon; t = t.next()) {
        const auto& space = *F.space_at(t.prev());
        for (std::size_t i = 0; i < space.size(); ++i) {
            const Path& w = space.outcome(i);
            json row{{"t", t.to_string()},
                     {"path", w.to_string()},
                     {"phi", num(strat.phi_at(t, w))},
                     {"psi", num(strat.psi_at(t, w))}};
            if (covered) row["covered"] = static_cast<bool>((*covered)[static_cast<std::size_t>(t.prev().step())][i]);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string node_id(const GridTime& t, const Path& w) { return t.to_string() + "/" + w.to_string(); }

}  // namespace

json num(double x) {
    if (!std::isfinite(x)) return nullptr;
    if (x == 0.0) return 0.0;
    return std::stod(fmt12(x));
}

std::string render(const json& report) { return report.dump(2) + "\n"; }

GridTime parse_time(const json& value, int max_resolution, const std::string& field) {
    return at_resolution(parse_dyadic(value, field), max_resolution, field);
}

std::pair<Path, double> parse_free_q(const std::string& text) {
    const auto eq = text.find('=');
    const std::string field = "--free-q " + text;
    if (eq == std::string::npos) throw InputError(field, "expected node=value");
    const Path node = parse_path(text.substr(0, eq), field);
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(text.substr(eq + 1), &used);
        if (used != text.size() - eq - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw InputError(field, "value is not a number");
    }
    if (!(value >= 0.0 && value <= 1.0)) throw InputError(field, "probability must lie in [0,1]");
    return {node, value};
}

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) throw InputError("", "scenario must be a JSON object");
    reject_unknown(doc, {"name", "description", "N", "horizon", "p", "market", "filtration", "claim", "free_q", "tolerances"}, "");
    Scenario sc;

    const auto n_it = doc.find("N");
    if (n_it == doc.end()) throw InputError("N", "missing");
    if (!n_it->is_number_integer()) throw InputError("N", "expected an integer");
    const auto N = n_it->get<std::int64_t>();
    if (N < 0 || N > kMaxResolution) throw InputError("N", fmt::format("must lie in [0, {}]", kMaxResolution));
    sc.N = static_cast<int>(N);

    if (!doc.contains("horizon")) throw InputError("horizon", "missing");
    sc.horizon = parse_time(doc["horizon"], sc.N, "horizon");

    if (const auto it = doc.find("p"); it != doc.end()) {
        if (it->is_number()) {
            sc.p = BernoulliParams(probability(*it, "p"));
        } else if (it->is_object()) {
            const auto def = it->find("default");
            sc.p = BernoulliParams(def == it->end() ? 0.5 : probability(*def, "p.default"));
            for (const auto& [key, value] : it->items()) {
                if (key == "default") continue;
                const std::string field = "p." + key;
                const GridTime s = parse_time(json(key), sc.N, field);
                if (s.is_zero() || s > sc.horizon) throw InputError(field, "time must lie in (0, horizon]");
                sc.p.set(s, probability(value, field));
            }
        } else {
            throw InputError("p", "expected a number or an object of time -> probability");
        }
    }

    const json& market = require_object(doc, "market", "market");
    reject_unknown(market, {"mu", "sigma", "r", "s0"}, "market");
    sc.market.mu = get_number(market, "mu", "market.mu");
    sc.market.sigma = get_number(market, "sigma", "market.sigma");
    sc.market.r = get_number(market, "r", "market.r");
    sc.market.s0 = market.contains("s0") ? get_number(market, "s0", "market.s0") : 1.0;
    sc.market.N = sc.N;
    try {
        sc.market.validate();
    } catch (const ParameterError& e) {
        throw InputError("market", e.what());
    }

    if (const auto it = doc.find("filtration"); it != doc.end()) {
        if (!it->is_object()) throw InputError("filtration", "expected an object");
        const json& f = *it;
        reject_unknown(f, {"kind", "alpha", "beta", "steps"}, "filtration");
        const auto kind = f.find("kind");
        if (kind == f.end() || !kind->is_string()) throw InputError("filtration.kind", "expected \"full\", \"drop\" or \"custom\"");
        sc.filtration.kind = kind->get<std::string>();
        if (sc.filtration.kind == "drop") {
            for (const char* key : {"alpha", "beta"}) {
                const std::string field = std::string("filtration.") + key;
                if (!f.contains(key)) throw InputError(field, "missing");
                const Dyadic d = parse_dyadic(f[key], field);
                if (d.k > kMaxResolution) throw InputError(field, "resolution too fine");
                (key == std::string("alpha") ? sc.filtration.alpha : sc.filtration.beta) =
                    at_resolution(d, std::max(d.k, sc.N), field);
            }
            if (sc.filtration.alpha.is_zero()) throw InputError("filtration.alpha", "must be positive");
            if (sc.filtration.beta < sc.filtration.alpha) throw InputError("filtration.beta", "must not precede alpha");
        } else if (sc.filtration.kind == "custom") {
            const json& steps = require_object(f, "steps", "filtration.steps");
            for (const auto& [key, table] : steps.items()) {
                const std::string field = "filtration.steps." + key;
                const GridTime t = parse_time(json(key), sc.N, field);
                if (t.is_zero() || t > sc.horizon) throw InputError(field, "step time must lie in (0, horizon]");
                if (!table.is_object()) throw InputError(field, "expected an object of path -> path");
                if (t.step() > max_bits()) throw InputError(field, "step exceeds the enumeration cap");
                auto& map = sc.filtration.steps[t];
                for (const auto& [from, to] : table.items()) {
                    const std::string entry = field + "." + from;
                    const Path src = parse_path(from, entry);
                    if (src.length() != t.step()) throw InputError(entry, "source path must have one bit per step up to " + t.to_string());
                    if (!to.is_string()) throw InputError(entry, "expected a path string");
                    const Path dst = parse_path(to.get<std::string>(), entry);
                    if (dst.length() + 1 != t.step()) throw InputError(entry, "image must be a path ending at " + t.prev().to_string());
                    map[src] = dst;
                }
                const std::size_t total = std::size_t{1} << t.step();
                if (map.size() != total) {
                    for (std::uint64_t code = 0; code < total; ++code) {
                        const Path w(code, static_cast<int>(t.step()));
                        if (!map.count(w)) throw InputError(field + "." + w.to_string(), "missing from the step table");
                    }
                }
            }
        } else if (sc.filtration.kind != "full") {
            throw InputError("filtration.kind", "expected \"full\", \"drop\" or \"custom\", got \"" + sc.filtration.kind + "\"");
        }
    }

    if (const auto it = doc.find("claim"); it != doc.end()) {
        if (!it->is_object()) throw InputError("claim", "expected an object");
        reject_unknown(*it, {"maturity", "payoff"}, "claim");
        ClaimSpec c;
        if (!it->contains("maturity")) throw InputError("claim.maturity", "missing");
        c.maturity = parse_time((*it)["maturity"], sc.N, "claim.maturity");
        if (c.maturity > sc.horizon) throw InputError("claim.maturity", "must not exceed the horizon");
        const json& payoff = require_object(*it, "payoff", "claim.payoff");
        reject_unknown(payoff, {"type", "strike", "values"}, "claim.payoff");
        const auto type = payoff.find("type");
        if (type == payoff.end() || !type->is_string()) throw InputError("claim.payoff.type", "missing");
        c.type = type->get<std::string>();
        if (c.type == "call" || c.type == "put" || c.type == "digital") {
            c.strike = get_number(payoff, "strike", "claim.payoff.strike");
        } else if (c.type == "table") {
            const json& values = require_object(payoff, "values", "claim.payoff.values");
            for (const auto& [key, value] : values.items()) {
                const std::string field = "claim.payoff.values." + key;
                const Path w = parse_path(key, field);
                if (w.length() != c.maturity.step()) throw InputError(field, "path does not end at the maturity");
                if (!value.is_number()) throw InputError(field, "expected a number");
                c.values[w] = value.get<double>();
            }
            if (c.maturity.step() > max_bits()) throw InputError("claim.maturity", "exceeds the enumeration cap");
            const std::size_t total = std::size_t{1} << c.maturity.step();
            for (std::uint64_t code = 0; code < total && c.values.size() != total; ++code) {
                const Path w(code, static_cast<int>(c.maturity.step()));
                if (!c.values.count(w)) throw InputError("claim.payoff.values." + w.to_string(), "missing; the table must cover every path");
            }
        } else if (c.type != "bond") {
            throw InputError("claim.payoff.type", "expected call, put, digital, bond or table, got \"" + c.type + "\"");
        }
        sc.claim = std::move(c);
    }

    if (const auto it = doc.find("free_q"); it != doc.end()) {
        if (!it->is_object()) throw InputError("free_q", "expected an object of path -> probability");
        for (const auto& [key, value] : it->items()) {
            const std::string field = "free_q." + key;
            sc.free_q[parse_path(key, field)] = probability(value, field);
        }
    }

    if (const auto it = doc.find("tolerances"); it != doc.end()) {
        if (!it->is_object()) throw InputError("tolerances", "expected an object");
        reject_unknown(*it, {"mass", "eq"}, "tolerances");
        if (it->contains("mass")) sc.tolerances.mass = get_number(*it, "mass", "tolerances.mass");
        if (it->contains("eq")) sc.tolerances.eq = get_number(*it, "eq", "tolerances.eq");
        if (!(sc.tolerances.mass > 0.0)) throw InputError("tolerances.mass", "must be positive");
        if (!(sc.tolerances.eq > 0.0)) throw InputError("tolerances.eq", "must be positive");
    }

    if (sc.horizon.step() > max_bits()) {
        throw InputError("horizon", fmt::format("{} grid steps exceed the enumeration cap of {} bits", sc.horizon.step(), max_bits()));
    }
    sc.hash = sha256_hex(doc.dump());
    return sc;
}

Scenario load_scenario(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InputError("--scenario", "cannot open '" + file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw InputError("--scenario", std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

Filtration build_filtration(const Scenario& sc) {
    const auto& spec = sc.filtration;
    if (spec.kind == "drop") return make_drop_filtration(sc.N, sc.p, spec.alpha, spec.beta, sc.horizon);
    if (spec.kind == "custom") {
        const auto steps = spec.steps;
        return make_step_filtration(
            sc.N, sc.p, sc.horizon,
            [steps](const GridTime& t, const Path& w) {
                if (const auto it = steps.find(t); it != steps.end()) return it->second.at(w);
                return restrict_path(w, t.prev());
            },
            [steps](const GridTime& t) { return steps.count(t) ? ArrowKind::custom : ArrowKind::full; }, "custom");
    }
    return make_full_filtration(sc.N, sc.p, sc.horizon);
}

Claim build_claim(const Scenario& sc, const Filtration& F) {
    const ClaimSpec& c = require_claim(sc, "pricing");
    if (c.type == "call") return Claim::call(F, sc.market, c.maturity, c.strike);
    if (c.type == "put") return Claim::put(F, sc.market, c.maturity, c.strike);
    if (c.type == "digital") return Claim::digital(F, sc.market, c.maturity, c.strike);
    if (c.type == "bond") {
        const double bT = std::pow(sc.market.growth(), static_cast<double>(c.maturity.step()));
        return Claim::from_function(c.maturity, [bT](const Path&) { return bT; });
    }
    return Claim::table(c.maturity, c.values);
}

RiskNeutralFiltration build_risk_neutral(const Scenario& sc, const Filtration& F) {
    if (sc.filtration.kind == "custom") throw ParameterError("risk-neutral construction supports full and drop filtrations only");
    if (sc.filtration.kind == "full") {
        if (!sc.free_q.empty()) throw InputError("free_q", "free choices only apply to drop filtrations");
        return build_rn_full(F, sc.market);
    }
    try {
        return build_rn_drop(F, sc.market, sc.free_q);
    } catch (const NoArbitrageBoundError&) {
        throw;
    } catch (const ParameterError& e) {
        throw InputError("free_q", e.what());
    }
}

Outcome cmd_check(const Scenario& sc, const Options& opt) {
    const double eps = eq_tolerance(sc, opt);
    const double mass = sc.tolerances.mass;
    const Filtration F = build_filtration(sc);
    json checks = json::array();
    json results;
    results["filtration"] = F.name();
    results["horizon"] = sc.horizon.to_string();
    results["N"] = sc.N;

    const auto laws = check_functor_laws(F, sc.horizon, mass);
    json law_witnesses = json::array();
    for (const auto& v : laws.violations) {
        law_witnesses.push_back({{"kind", to_string(v.kind)},
                                 {"s", v.s.to_string()},
                                 {"t", v.t.to_string()},
                                 {"u", v.u.to_string()},
                                 {"path", v.path.to_string()},
                                 {"detail", v.detail}});
    }
    checks.push_back(check_entry("functor_laws", laws.ok(), std::move(law_witnesses)));
    results["functor_laws"] = {{"unit_checks", laws.unit_checks},
                               {"composition_checks", laws.composition_checks},
                               {"null_checks", laws.null_checks}};

    const auto nat = naturality_check(F, sc.horizon, eps);
    json nat_witnesses = json::array();
    for (const auto& v : nat.violations) {
        nat_witnesses.push_back({{"s", v.s.to_string()},
                                 {"t", v.t.to_string()},
                                 {"path", v.path.to_string()},
                                 {"tilde_side", v.tilde_side.to_string()},
                                 {"direct_side", v.direct_side.to_string()}});
    }
    checks.push_back(check_entry("naturality", nat.ok(), std::move(nat_witnesses)));
    results["naturality"] = {{"squares_checked", nat.squares_checked}, {"max_mass_defect", num(nat.max_mass_defect)}};

    const auto attempt = try_risk_neutral(sc, F);
    if (!attempt.rn) {
        results["risk_neutral"] = {{"status", "skipped"}, {"reason", attempt.reason}};
        json out = report(sc, std::move(checks), std::move(results));
        const auto code = verdict(out["checks"]);
        return {code, std::move(out), {}};
    }
    const auto& rn = *attempt.rn;
    const auto constants = martingale_constants(sc.market);
    results["risk_neutral"] = {{"status", "built"},
                               {"q_star", q_star_json(sc)},
                               {"c1", num(constants.c1)},
                               {"c0", num(constants.c0)}};

    const auto mart = martingale_check(rn, sc.market, sc.horizon, eps);
    json mart_witnesses = json::array();
    for (const auto& n : mart.failures) {
        mart_witnesses.push_back({{"t", n.t.to_string()},
                                  {"path", n.path.to_string()},
                                  {"q_mass", num(n.q_mass)},
                                  {"iiff_residual", num(n.iiff_residual)},
                                  {"direct_residual", n.direct_residual ? num(*n.direct_residual) : json(nullptr)}});
    }
    checks.push_back(check_entry("martingale", mart.ok(), std::move(mart_witnesses)));
    results["martingale"] = {{"nodes_checked", mart.nodes_checked},
                             {"max_iiff_residual", num(mart.max_iiff_residual)},
                             {"max_direct_residual", num(mart.max_direct_residual)},
                             {"note", mart.note}};

    const auto qc = qcond_equivalences(rn, sc.horizon, eps);
    json qc_witnesses = json::array();
    auto add_qc = [&](const char* condition, const std::vector<QcondWitness>& ws) {
        for (const auto& w : ws) {
            qc_witnesses.push_back({{"condition", condition},
                                    {"t", w.t.to_string()},
                                    {"path", w.path.to_string()},
                                    {"residual", num(w.residual)}});
        }
    };
    add_qc("sibling_sums", qc.sibling_witnesses);
    add_qc("full_preserving", qc.full_witnesses);
    add_qc("product_form", qc.product_witnesses);
    checks.push_back(check_entry("qcond", qc.all_pass(), std::move(qc_witnesses)));
    results["qcond"] = {{"sibling_sums", qc.sibling_sums},
                        {"full_preserving", qc.full_preserving},
                        {"product_form", qc.product_form},
                        {"consistent", qc.consistent()}};

    const auto np = verify_null_preserving_under_Q(rn, sc.horizon, mass);
    json np_witnesses = json::array();
    for (const auto& v : np.violations) {
        np_witnesses.push_back({{"s", v.s.to_string()},
                                {"t", v.t.to_string()},
                                {"path", v.path.to_string()},
                                {"pulled_back_mass", num(v.pulled_back_mass)}});
    }
    checks.push_back(check_entry("null_preserving_under_q", np.ok(), std::move(np_witnesses)));
    results["null_preserving_under_q"] = {{"arrows_checked", np.arrows_checked}};

    json non_equivalence = json::array();
    for (const auto& [t, w] : equivalence_witnesses(rn, sc.horizon, mass)) {
        non_equivalence.push_back({{"t", t.to_string()},
                                   {"path", w.to_string()},
                                   {"P", num(F.space_at(t)->weight_of(w))},
                                   {"Q", num(rn.measure_at(t)->weight_of(w))}});
    }
    results["non_equivalence_witnesses"] = std::move(non_equivalence);

    json out = report(sc, std::move(checks), std::move(results));
    const auto code = verdict(out["checks"]);
    return {code, std::move(out), {}};
}

Outcome cmd_price(const Scenario& sc, const Options&) {
    require_claim(sc, "price");
    const Filtration F = build_filtration(sc);
    const auto rn = require_risk_neutral(sc, F);
    const Claim claim = build_claim(sc, F);
    const auto lattice = price_lattice(claim, rn, sc.market);
    const auto nodal = nodal_prices(lattice, rn, sc.market);
    json rows = json::array();
    for (std::size_t k = 0; k < lattice.slices.size(); ++k) {
        const GridTime t(static_cast<std::int64_t>(k), sc.N);
        const auto& space = *lattice.slices[k].space();
        for (std::size_t i = 0; i < space.size(); ++i) {
            rows.push_back({{"t", t.to_string()},
                            {"path", space.outcome(i).to_string()},
                            {"Q", num(space.weight(i))},
                            {"price", num(lattice.slices[k][i])},
                            {"nodal_price", num(nodal.slices[k][i])}});
        }
    }
    json results{{"maturity", claim.maturity.to_string()},
                 {"payoff", sc.claim->type},
                 {"root_price", num(lattice.slices.front()[0])},
                 {"lattice", std::move(rows)}};
    return {ExitCode::pass, report(sc, json::array(), std::move(results)), {}};
}

Outcome cmd_replicate(const Scenario& sc, const Options& opt) {
    require_claim(sc, "replicate");
    const double eps = eq_tolerance(sc, opt);
    const Filtration F = build_filtration(sc);
    const Claim claim = build_claim(sc, F);
    // Factorization does not depend on the measure, so a custom filtration is
    // checked against full before the risk-neutral requirement applies.
    for (GridTime t(0, sc.N); t < claim.maturity; t = t.next()) {
        const auto g = g_factorize(F.one_step(t));
        if (!g.ok) {
            const std::string step = t.to_string() + "->" + t.next().to_string();
            const std::string message = "one-step map " + step + " does not factor through full: " +
                                        g.separating->to_string() + "0 and " + g.separating->to_string() +
                                        "1 have different images";
            json witness{{"step", step}, {"separating", g.separating->to_string()}, {"message", message}};
            json results{{"error", {{"type", "factorization"}, {"step", step}, {"message", message}}}};
            return {ExitCode::violations,
                    report(sc, json::array({check_entry("factorization", false, json::array({witness}))}), std::move(results)),
                    {}};
        }
    }
    const auto rn = require_risk_neutral(sc, F);
    const auto rep = replicate(claim, rn, sc.market);
    const auto rc = replication_check(rep.strategy, claim, rn, sc.market, eps);
    json witnesses = json::array();
    for (const auto& issue : rc.issues) {
        witnesses.push_back({{"check", issue.check},
                             {"t", issue.t.to_string()},
                             {"path", issue.path.to_string()},
                             {"residual", num(issue.residual)}});
    }
    json checks = json::array({check_entry("factorization", true, json::array()),
                               check_entry("replication", rc.ok(), std::move(witnesses))});
    json results{{"maturity", claim.maturity.to_string()},
                 {"payoff", sc.claim->type},
                 {"initial_value", num(rep.value.slices.front()[0])},
                 {"strategy", claim.maturity.is_zero() ? json::array() : strategy_rows(rep.strategy, F, &rep.covered)},
                 {"residuals",
                  {{"self_financing", num(rc.max_self_financing)},
                   {"terminal", num(rc.max_terminal)},
                   {"vn_pre", num(rc.max_vn_pre)},
                   {"price", num(rc.max_price)}}}};
    json out = report(sc, std::move(checks), std::move(results));
    const auto code = verdict(out["checks"]);
    return {code, std::move(out), {}};
}

Outcome cmd_arbitrage(const Scenario& sc, const Options&) {
    const Filtration F = build_filtration(sc);
    const auto result = detect_arbitrage(F, sc.market, sc.horizon);
    json results;
    json warnings = json::array();
    json checks = json::array();
    results["message"] = result.message;
    results["bound"] = num(sc.market.arbitrage_bound());
    results["excess_return"] = num(sc.market.mu - sc.market.r);
    if (result.status == ArbitrageResult::Status::within_bound) {
        results["status"] = "none";
        results["strategy"] = nullptr;
        results["is_arbitrage"] = false;
    } else {
        results["status"] = "constructed";
        results["strategy"] = strategy_rows(*result.strategy, F, nullptr);
        results["is_arbitrage"] = result.verified;
        const auto G = gain_process(*result.strategy, F, sc.market, sc.horizon);
        json gains = json::array();
        for (std::size_t k = 0; k < G.slices.size(); ++k) {
            const GridTime t(static_cast<std::int64_t>(k), sc.N);
            const auto& space = *G.slices[k].space();
            for (std::size_t i = 0; i < space.size(); ++i) {
                gains.push_back({{"t", t.to_string()},
                                 {"path", space.outcome(i).to_string()},
                                 {"P", num(space.weight(i))},
                                 {"gain", num(G.slices[k][i])}});
            }
        }
        results["gains"] = std::move(gains);
        if (result.trivial_filtration) {
            warnings.push_back("filtration is trivial: positivity-probability condition unverifiable");
        }
        checks.push_back(check_entry("arbitrage_verified", result.verified || result.trivial_filtration,
                                     result.verified ? json::array() : json::array({result.message})));
    }
    results["warnings"] = std::move(warnings);
    json out = report(sc, std::move(checks), std::move(results));
    const auto code = verdict(out["checks"]);
    return {code, std::move(out), {}};
}

Outcome cmd_experienced(const Scenario& sc, const Options& opt) {
    if (!opt.path) throw InputError("--path", "the experienced command needs a path");
    const Path w = parse_path(*opt.path, "--path");
    const GridTime t(w.length(), sc.N);
    if (t > sc.horizon) throw InputError("--path", "path runs past the horizon " + sc.horizon.to_string());
    const double eps = eq_tolerance(sc, opt);
    const Filtration F = build_filtration(sc);
    const Path e = experienced_path(F, t, w);

    json tilde = json::array();
    for (const auto& s : times_until(sc.N, sc.horizon)) {
        const auto space = experienced_space(F, s);
        double total = 0.0;
        for (double x : space->weights()) total += x;
        tilde.push_back({{"t", s.to_string()},
                         {"paths", std::uint64_t{1} << s.step()},
                         {"experienced_paths", space->size()},
                         {"mass", num(total)}});
    }

    const auto nat = naturality_check(F, sc.horizon, eps);
    json witnesses = json::array();
    for (const auto& v : nat.violations) {
        witnesses.push_back({{"s", v.s.to_string()},
                             {"t", v.t.to_string()},
                             {"path", v.path.to_string()},
                             {"tilde_side", v.tilde_side.to_string()},
                             {"direct_side", v.direct_side.to_string()}});
    }
    json checks = json::array({check_entry("naturality", nat.ok(), std::move(witnesses))});
    json results{{"t", t.to_string()},
                 {"path", w.to_string()},
                 {"experienced", e.to_string()},
                 {"tilde", std::move(tilde)},
                 {"naturality", {{"squares_checked", nat.squares_checked}, {"max_mass_defect", num(nat.max_mass_defect)}}}};
    json out = report(sc, std::move(checks), std::move(results));
    const auto code = verdict(out["checks"]);
    return {code, std::move(out), {}};
}

Outcome cmd_export(const Scenario& sc, const Options& opt) {
    static const std::vector<std::string> kAll = {"lattice-dot", "lattice-csv", "measures-csv"};
    const bool explicit_list = !opt.exports.empty();
    const auto& what = explicit_list ? opt.exports : kAll;
    for (const auto& w : what) {
        if (std::find(kAll.begin(), kAll.end(), w) == kAll.end()) {
            throw InputError("--what", "unknown export '" + w + "'; expected lattice-dot, lattice-csv or measures-csv");
        }
    }
    const Filtration F = build_filtration(sc);
    const auto attempt = try_risk_neutral(sc, F);
    const auto times = times_until(sc.N, sc.horizon);
    Outcome out;
    json files = json::array();
    json warnings = json::array();
    if (!attempt.rn) warnings.push_back("no risk-neutral measure: " + attempt.reason);

    auto invisible = [&](const GridTime& t, std::size_t i) {
        return attempt.rn && F.space_at(t)->weight(i) > sc.tolerances.mass &&
               attempt.rn->measure_at(t)->weight(i) <= sc.tolerances.mass;
    };

    for (const auto& w : what) {
        if (w == "lattice-dot") {
            std::string dot = "digraph lattice {\n  rankdir=LR;\n  node [shape=box];\n";
            for (const auto& t : times) {
                const auto& space = *F.space_at(t);
                for (std::size_t i = 0; i < space.size(); ++i) {
                    const Path& p = space.outcome(i);
                    dot += fmt::format("  \"{}\" [label=\"{}\"", node_id(t, p), p.to_string());
                    if (invisible(t, i)) dot += ", style=dashed, color=gray50, fontcolor=gray50, invisible=true";
                    dot += "];\n";
                }
            }
            for (const auto& t : times) {
                if (t == sc.horizon) break;
                const auto step = F.one_step(t);
                const char* kind = to_string(F.kind(t, t.next()));
                const auto& src = *step.source();
                for (std::size_t i = 0; i < src.size(); ++i) {
                    dot += fmt::format("  \"{}\" -> \"{}\" [kind={}, label=\"{}\"];\n", node_id(t.next(), src.outcome(i)),
                                       node_id(t, step.image(i)), kind, kind);
                }
            }
            dot += "}\n";
            out.files.emplace_back("lattice.dot", std::move(dot));
            files.push_back("lattice.dot");
        } else if (w == "lattice-csv") {
            if (!sc.claim || !attempt.rn) {
                const std::string why = !sc.claim ? "lattice-csv needs a claim" : "lattice-csv needs a risk-neutral measure";
                if (explicit_list) throw InputError(!sc.claim ? "claim" : "market", why);
                warnings.push_back("skipped lattice.csv: " + why);
                continue;
            }
            const Claim claim = build_claim(sc, F);
            const auto lattice = price_lattice(claim, *attempt.rn, sc.market);
            std::string csv = "t,path,value\n";
            for (std::size_t k = 0; k < lattice.slices.size(); ++k) {
                const GridTime t(static_cast<std::int64_t>(k), sc.N);
                const auto& space = *lattice.slices[k].space();
                for (std::size_t i = 0; i < space.size(); ++i) {
                    csv += fmt::format("{},{},{}\n", t.to_string(), space.outcome(i).to_string(), fmt12(lattice.slices[k][i]));
                }
            }
            out.files.emplace_back("lattice.csv", std::move(csv));
            files.push_back("lattice.csv");
        } else {
            std::string csv = "t,path,P,Q\n";
            for (const auto& t : times) {
                const auto& space = *F.space_at(t);
                for (std::size_t i = 0; i < space.size(); ++i) {
                    const std::string q = attempt.rn ? fmt12(attempt.rn->measure_at(t)->weight(i)) : std::string();
                    csv += fmt::format("{},{},{},{}\n", t.to_string(), space.outcome(i).to_string(), fmt12(space.weight(i)), q);
                }
            }
            out.files.emplace_back("measures.csv", std::move(csv));
            files.push_back("measures.csv");
        }
    }
    json invisible_nodes = json::array();
    if (attempt.rn) {
        for (const auto& [t, p] : equivalence_witnesses(*attempt.rn, sc.horizon, sc.tolerances.mass)) {
            invisible_nodes.push_back(node_id(t, p));
        }
    }
    out.report = report(sc, json::array(),
                        json{{"files", std::move(files)}, {"invisible_nodes", std::move(invisible_nodes)}, {"warnings", std::move(warnings)}});
    return out;
}

Outcome run_command(const std::string& command, const std::string& scenario_file, const Options& opt) {
    std::string hash;
    try {
        Scenario sc = load_scenario(scenario_file);
        hash = sc.hash;
        for (const auto& text : opt.free_q) {
            const auto [node, value] = parse_free_q(text);
            sc.free_q[node] = value;
        }
        if (opt.tolerance && !(*opt.tolerance > 0.0)) throw InputError("--tolerance", "must be positive");
        if (command == "check") return cmd_check(sc, opt);
        if (command == "price") return cmd_price(sc, opt);
        if (command == "replicate") return cmd_replicate(sc, opt);
        if (command == "arbitrage") return cmd_arbitrage(sc, opt);
        if (command == "experienced") return cmd_experienced(sc, opt);
        if (command == "export") return cmd_export(sc, opt);
        throw InputError("command", "unknown command '" + command + "'");
    } catch (const InputError& e) {
        json error{{"field", e.field()}, {"message", e.what()}};
        return {ExitCode::input_error,
                json{{"scenario_hash", hash.empty() ? json(nullptr) : json(hash)},
                     {"checks", json::array()},
                     {"results", {{"error", std::move(error)}}}},
                {}};
    } catch (const Error& e) {
        json error{{"field", ""}, {"message", e.what()}};
        return {ExitCode::input_error,
                json{{"scenario_hash", hash.empty() ? json(nullptr) : json(hash)},
                     {"checks", json::array()},
                     {"results", {{"error", std::move(error)}}}},
                {}};
    }
}

}  // namespace genfil::cli

#pragma once

#include "genfil/binomial_filtration.hpp"
#include "genfil/errors.hpp"
#include "genfil/market.hpp"
#include "genfil/path.hpp"
#include "genfil/prob_core.hpp"
#include "genfil/risk_neutral.hpp"
#include "genfil/timegrid.hpp"
#include "genfil/valuation.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace genfil::cli {

/// Malformed scenario or command-line input. `field` is the JSON path of the
/// offending entry, e.g. "market.sigma" or "claim.payoff.values.01".
class InputError : public Error {
public:
    InputError(const std::string& field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class ExitCode { pass = 0, violations = 1, input_error = 2 };

struct FiltrationSpec {
    std::string kind = "full";  // full | drop | custom
    GridTime alpha;
    GridTime beta;
    /// custom only: one-step maps B_t -> B_{t-δ} keyed by t; steps not listed are restrictions.
    std::map<GridTime, std::map<Path, Path>> steps;
};

struct ClaimSpec {
    GridTime maturity;
    std::string type;  // call | put | digital | bond | table
    double strike = 0.0;
    std::map<Path, double> values;
};

struct Scenario {
    int N = 0;
    GridTime horizon;
    BernoulliParams p;
    MarketParams market;
    FiltrationSpec filtration;
    std::optional<ClaimSpec> claim;
    FreeQ free_q;
    Tolerances tolerances;
    /// SHA-256 of the canonical JSON serialization of the scenario document.
    std::string hash;
};

/// A dyadic time from a JSON number, "n/2^k", "n/d" with d a power of two, or
/// a decimal string. Throws InputError naming `field` if the value is not
/// dyadic or needs a resolution finer than `max_resolution`. The result is at
/// resolution `max_resolution`.
GridTime parse_time(const nlohmann::json& value, int max_resolution, const std::string& field);

Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& file);

/// "node=value" with node a bit string; merged over the scenario's free_q.
std::pair<Path, double> parse_free_q(const std::string& text);

Filtration build_filtration(const Scenario& sc);
Claim build_claim(const Scenario& sc, const Filtration& F);
/// Risk-neutral construction for full and drop kinds. Throws on custom kinds
/// and outside the no-arbitrage bound.
RiskNeutralFiltration build_risk_neutral(const Scenario& sc, const Filtration& F);

struct Options {
    std::optional<double> tolerance;
    std::vector<std::string> free_q;
    std::optional<std::string> path;
    std::optional<std::string> out_dir;
    std::vector<std::string> exports;  // lattice-dot | lattice-csv | measures-csv; empty means all
};

struct Outcome {
    ExitCode code = ExitCode::pass;
    nlohmann::json report;
    /// Files to write into the output directory, in order.
    std::vector<std::pair<std::string, std::string>> files;
};

Outcome cmd_check(const Scenario& sc, const Options& opt);
Outcome cmd_price(const Scenario& sc, const Options& opt);
Outcome cmd_replicate(const Scenario& sc, const Options& opt);
Outcome cmd_arbitrage(const Scenario& sc, const Options& opt);
Outcome cmd_experienced(const Scenario& sc, const Options& opt);
Outcome cmd_export(const Scenario& sc, const Options& opt);

/// Loads the scenario and dispatches on `command`. Input errors become an
/// Outcome with code input_error and an "error" report.
Outcome run_command(const std::string& command, const std::string& scenario_file, const Options& opt);

/// The report as written to disk and stdout: two-space indent, sorted keys,
/// trailing newline.
std::string render(const nlohmann::json& report);

/// x rounded to 12 significant digits; non-finite values become null.
nlohmann::json num(double x);

}  // namespace genfil::cli

#include "cli.hpp"

#include <cerrno>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "iondetect/ccd.hpp"
#include "iondetect/errors.hpp"
#include "iondetect/fidelity.hpp"
#include "iondetect/fitkit.hpp"
#include "iondetect/io.hpp"
#include "iondetect/mcsim.hpp"
#include "iondetect/specfun.hpp"

namespace iondetect::cli {

namespace {

using json = nlohmann::json;

enum class Kind { Number, Integer, Text, NumberList, Flag, Species };

struct Key {
    std::string name;
    Kind kind;
    std::string help;
};

// Merged view of the config document and the command-line flags.
class Settings {
public:
    explicit Settings(json values) : values_(std::move(values)) {}

    bool has(const std::string& key) const { return values_.contains(key); }

    double number(const std::string& key, double fallback) const
    {
        if (!has(key))
            return fallback;
        const json& v = values_.at(key);
        if (!v.is_number())
            throw ConfigError("key '" + key + "' must be a number");
        return v.get<double>();
    }

    std::uint64_t integer(const std::string& key, std::uint64_t fallback) const
    {
        if (!has(key))
            return fallback;
        const json& v = values_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
            throw ConfigError("key '" + key + "' must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& key, const std::string& fallback) const
    {
        if (!has(key))
            return fallback;
        const json& v = values_.at(key);
        if (!v.is_string())
            throw ConfigError("key '" + key + "' must be a string");
        return v.get<std::string>();
    }

    std::string required_text(const std::string& key) const
    {
        if (!has(key))
            throw ConfigError("missing required key '" + key + "'");
        return text(key, "");
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const
    {
        if (!has(key))
            return fallback;
        const json& v = values_.at(key);
        if (!v.is_array())
            throw ConfigError("key '" + key + "' must be a list of numbers");
        std::vector<double> out;
        for (const json& x : v) {
            if (!x.is_number())
                throw ConfigError("key '" + key + "' must be a list of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    bool flag(const std::string& key) const
    {
        if (!has(key))
            return false;
        const json& v = values_.at(key);
        if (!v.is_boolean())
            throw ConfigError("key '" + key + "' must be true or false");
        return v.get<bool>();
    }

    IonSpecies species() const
    {
        if (!has("species"))
            return find_species("Cd111");
        const json& v = values_.at("species");
        if (v.is_string())
            return find_species(v.get<std::string>());
        if (v.is_object())
            return species_from_json_text(v.dump());
        throw ConfigError("key 'species' must be a name or a species object");
    }

private:
    json values_;
};

std::string dashed(std::string name)
{
    std::replace(name.begin(), name.end(), '_', '-');
    return name;
}

json parse_value(const Key& key, const std::string& raw)
{
    auto to_number = [&](const std::string& s) {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
            throw ConfigError("key '" + key.name + "': '" + s + "' is not a number");
        return v;
    };
    switch (key.kind) {
    case Kind::Number:
        return to_number(raw);
    case Kind::Integer: {
        const double v = to_number(raw);
        if (v < 0 || v != std::floor(v))
            throw ConfigError("key '" + key.name + "' must be a non-negative integer");
        return static_cast<std::uint64_t>(v);
    }
    case Kind::NumberList: {
        json list = json::array();
        std::stringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ','))
            list.push_back(to_number(item));
        return list;
    }
    case Kind::Flag:
        return true;
    case Kind::Text:
    case Kind::Species:
        return raw;
    }
    return raw;
}

void write_or_print(const Settings& s, const std::string& content, std::ostream& out)
{
    if (s.has("out"))
        write_file_atomic(s.text("out", ""), content);
    else
        out << content;
}

std::string key_values(const std::vector<std::pair<std::string, std::string>>& rows)
{
    std::string text;
    for (const auto& [k, v] : rows)
        text += k + ": " + v + "\n";
    return text;
}

// Detection settings default to the fitted-histogram working point.
DetectionConfig detection_config(const Settings& s)
{
    DetectionConfig c;
    c.scheme = parse_scheme(s.text("scheme", "p32"));
    c.s = s.number("saturation_s", 0.25);
    c.delta = mhz_to_rad_s(s.number("detuning_mhz", 0.0));
    c.tau_d = s.number("tau_d_us", 150.0) * 1e-6;
    c.eta = s.number("eta", 1.4e-3);
    c.p_pi = s.number("p_pi", 0.0);
    c.p_minus = s.number("p_minus", 0.0);
    return c;
}

LeakParams leak_params(const Settings& s, const IonSpecies& species, const DetectionConfig& c)
{
    LeakParams p = detection_params(species, c);
    p.lambda0 = s.number("lambda0", p.lambda0);
    p.alpha1 = s.number("alpha1", p.alpha1);
    p.alpha2 = s.number("alpha2", p.alpha2);
    if (!(p.lambda0 >= 0.0) || !(p.alpha1 >= 0.0) || !(p.alpha2 >= 0.0))
        throw DomainError("lambda0, alpha1 and alpha2 must be >= 0");
    return p;
}

const std::vector<Key> kDetectionKeys = {
    {"species", Kind::Species, "species name (config may give a species object)"},
    {"scheme", Kind::Text, "p32 or p12"},
    {"eta", Kind::Number, "collection efficiency"},
    {"saturation_s", Kind::Number, "saturation parameter s"},
    {"detuning_mhz", Kind::Number, "laser detuning / 2pi, MHz"},
    {"tau_d_us", Kind::Number, "detection time, us"},
    {"p_pi", Kind::Number, "pi-polarized power fraction"},
    {"p_minus", Kind::Number, "sigma- power fraction"},
    {"lambda0", Kind::Number, "override the mean bright counts"},
    {"alpha1", Kind::Number, "override the dark-state leak probability"},
    {"alpha2", Kind::Number, "override the bright-state leak probability"},
};

std::vector<Key> with(std::vector<Key> base, const std::vector<Key>& extra)
{
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
}

int cmd_params(const Settings& s, std::ostream& out)
{
    const IonSpecies species = s.species();
    const DetectionConfig c = detection_config(s);
    const LeakParams p = leak_params(s, species, c);
    write_or_print(s,
                   key_values({{"species", species.name},
                               {"scheme", to_string(c.scheme)},
                               {"lambda0", format_number(p.lambda0)},
                               {"alpha1", format_number(p.alpha1)},
                               {"alpha2", format_number(p.alpha2)},
                               {"tau_leak_dark_us", format_number(1e6 * dark_leak_time(p, c.eta, c.tau_d))},
                               {"tau_leak_bright_us", format_number(1e6 * bright_leak_time(p, c.eta, c.tau_d))}}),
                   out);
    return 0;
}

int cmd_dist(const Settings& s, std::ostream&)
{
    const std::string path = s.required_text("out");
    const IonSpecies species = s.species();
    const DetectionConfig c = detection_config(s);
    const LeakParams p = leak_params(s, species, c);
    const auto n_max = static_cast<std::int64_t>(s.integer("n_max", histogram_nmax(p.lambda0)));
    write_file_atomic(path, distributions_to_csv(dark_distribution(p, c.eta, n_max),
                                                 bright_distribution(p, c.eta, n_max)));
    return 0;
}

int cmd_optimize(const Settings& s, std::ostream& out)
{
    const IonSpecies species = s.species();
    const Scheme scheme = parse_scheme(s.text("scheme", "p32"));
    const double eta = s.number("eta", 1e-3);
    const auto r = optimize_detection(species, scheme, eta);
    write_or_print(s,
                   key_values({{"species", species.name},
                               {"scheme", to_string(scheme)},
                               {"eta", format_number(eta)},
                               {"fidelity", format_number(r.fidelity)},
                               {"dark_fidelity", format_number(r.dark_fidelity)},
                               {"bright_fidelity", format_number(r.bright_fidelity)},
                               {"lambda0_opt", format_number(r.lambda0_opt)},
                               {"d_opt", std::to_string(r.d)}}),
                   out);
    return 0;
}

int cmd_curve(const Settings& s, std::ostream&)
{
    const std::string path = s.required_text("out");
    const auto rows = fidelity_curve(s.species(), parse_scheme(s.text("scheme", "p32")),
                                     s.numbers("eta_grid", {1e-3, 1e-2, 0.1, 0.3}));
    write_file_atomic(path, curve_to_csv(rows));
    return 0;
}

int cmd_table1(const Settings& s, std::ostream&)
{
    write_file_atomic(s.required_text("out"), fidelity_table_to_csv(p12_fidelity_table()));
    return 0;
}

int cmd_mc(const Settings& s, std::ostream&)
{
    const std::string path = s.required_text("out");
    const IonSpecies species = s.species();
    const DetectionConfig c = detection_config(s);
    const LeakParams p = leak_params(s, species, c);
    McConfig mc;
    mc.trials = s.integer("trials", 20000);
    mc.seed = s.integer("seed", 1);
    mc.mode = parse_mc_mode(s.text("mode", "rate_equation"));
    mc.initial = parse_initial_state(s.text("initial", "dark"));
    mc.threads = static_cast<unsigned>(s.integer("threads", 0));
    write_file_atomic(path, histogram_to_csv(simulate_histogram(p, c.eta, mc)));
    return 0;
}

int cmd_fit(const Settings& s, std::ostream& out)
{
    FitOptions o;
    o.species = s.species();
    o.scheme = parse_scheme(s.text("scheme", "p32"));
    o.tau_d = s.number("tau_d_us", 150.0) * 1e-6;
    o.fit_background = s.flag("background");
    const auto dark = histogram_from_csv(read_file(s.required_text("dark")));
    const auto bright = histogram_from_csv(read_file(s.required_text("bright")));
    const FitResult fit = fit_histograms(dark, bright, o);
    write_or_print(s, fit_result_to_text(fit), out);
    if (s.has("model_csv"))
        write_file_atomic(s.text("model_csv", ""), model_rows_to_csv(model_vs_data(fit, o, dark, bright)));
    return 0;
}

int cmd_ccd_sim(const Settings& s, std::ostream& out)
{
    const std::string path = s.required_text("out");
    const IonSpecies species = s.species();
    const LeakParams floor = ideal_leak_floor(species, parse_scheme(s.text("scheme", "p32")));
    const double alpha1 = s.number("alpha1", floor.alpha1);
    const double alpha2 = s.number("alpha2", 0.0);
    std::vector<LeakParams> leak;
    for (double l0 : s.numbers("ion_lambda0", {5.5, 7.15, 5.5}))
        leak.push_back({l0, alpha1, alpha2});

    CcdParams ccd;
    ccd.gain_g = s.number("gain_g", ccd.gain_g);
    ccd.readout_rms_r = s.number("readout_rms_r", ccd.readout_rms_r);
    ccd.bin_factor = static_cast<int>(s.integer("bin_factor", ccd.bin_factor));
    ccd.offset = s.number("offset", ccd.offset);
    ccd.counts_per_photon = s.number("counts_per_photon", ccd.counts_per_photon);
    ccd.psf_sigma = s.number("psf_sigma", ccd.psf_sigma);
    ccd.gain_dist = parse_gain_dist(s.text("gain_dist", "exponential"));

    const int roi = static_cast<int>(s.integer("roi_size", 7));
    const RegisterSetup setup =
        linear_chain_setup(leak, s.number("eta", 1e-3), ccd, s.number("crosstalk_eps", 0.0), roi);
    setup.validate();
    const std::uint64_t trials = s.integer("trials", 4000);
    const std::uint64_t seed = s.integer("seed", 1);
    const auto run = run_register_experiment(setup, trials, seed, static_cast<unsigned>(s.integer("threads", 0)));

    std::vector<std::pair<std::string, std::string>> rows = {
        {"trials", std::to_string(trials)},
        {"seed", std::to_string(seed)},
        {"crosstalk_eps", format_number(setup.crosstalk_eps)},
        {"adjacent_deviation", format_number(run.adjacent_deviation())}};
    for (std::size_t i = 0; i < setup.ions(); ++i) {
        rows.emplace_back(fmt::format("threshold_{}", i), format_number(run.thresholds[i]));
        rows.emplace_back(fmt::format("calibration_dark_error_{}", i), format_number(run.calibration_dark_error[i]));
        rows.emplace_back(fmt::format("calibration_bright_error_{}", i), format_number(run.calibration_bright_error[i]));
        rows.emplace_back(fmt::format("fidelity_{}", i), format_number(run.fidelity[i]));
    }
    for (std::size_t i = 0; i < setup.ions(); ++i)
        for (std::size_t j = 0; j < setup.ions(); ++j) {
            if (i == j)
                continue;
            const auto& e = run.correlations.at(i, j);
            const std::string tag = fmt::format("{}_{}", i, j);
            if (!e.defined) {
                rows.emplace_back("deviation_" + tag, "undefined");
                continue;
            }
            rows.emplace_back("deviation_" + tag, format_number(e.deviation));
            rows.emplace_back("std_error_" + tag, format_number(e.std_error));
        }

    write_file_atomic(path, readouts_to_csv(run.readouts));
    const std::string report = key_values(rows);
    if (s.has("report"))
        write_file_atomic(s.text("report", ""), report);
    else
        out << report;
    if (s.has("frame_pgm")) {
        const FrameSynthesizer synth(setup);
        write_file_atomic(s.text("frame_pgm", ""), frame_to_pgm(synth(std::vector<int>(setup.ions(), 1), seed)));
    }
    return 0;
}

int cmd_crosstalk(const Settings& s, std::ostream& out)
{
    const double wavelength = s.number("wavelength_nm", 214.5) * 1e-9;
    const double spacing = s.number("spacing_um", 4.0) * 1e-6;
    write_or_print(s, key_values({{"ratio", format_number(crosstalk_ratio(wavelength, spacing))}}), out);
    return 0;
}

struct Command {
    std::string name;
    std::string description;
    std::vector<Key> keys;
    std::function<int(const Settings&, std::ostream&)> run;
};

std::vector<Command> commands()
{
    const Key out_opt{"out", Kind::Text, "output path (stdout when omitted)"};
    const Key out_req{"out", Kind::Text, "output path"};
    const Key species{"species", Kind::Species, "species name (config may give a species object)"};
    const Key scheme{"scheme", Kind::Text, "p32 or p12"};
    return {
        {"params", "print lambda0 and the leak probabilities", with(kDetectionKeys, {out_opt}), cmd_params},
        {"dist", "write p_dark and p_bright as CSV",
         with(kDetectionKeys, {out_req, {"n_max", Kind::Integer, "last photon number"}}), cmd_dist},
        {"optimize", "optimize light level and threshold",
         {species, scheme, {"eta", Kind::Number, "collection efficiency"}, out_opt}, cmd_optimize},
        {"curve", "infidelity versus collection efficiency",
         {species, scheme, {"eta_grid", Kind::NumberList, "comma-separated eta values"}, out_req}, cmd_curve},
        {"table1", "P1/2 fidelities for the built-in species", {out_req}, cmd_table1},
        {"mc", "Monte Carlo photon-count histogram",
         with(kDetectionKeys,
              {out_req,
               {"trials", Kind::Integer, "number of trajectories"},
               {"seed", Kind::Integer, "random seed"},
               {"mode", Kind::Text, "rate_equation or photon_level"},
               {"initial", Kind::Text, "dark or bright"},
               {"threads", Kind::Integer, "worker threads (0 = all cores)"}}),
         cmd_mc},
        {"fit", "fit dark and bright histograms",
         {species,
          scheme,
          {"tau_d_us", Kind::Number, "detection time, us"},
          {"dark", Kind::Text, "dark-prepared histogram CSV"},
          {"bright", Kind::Text, "bright-prepared histogram CSV"},
          {"background", Kind::Flag, "fit a Poisson background"},
          {"model_csv", Kind::Text, "model-vs-data CSV path"},
          out_opt},
         cmd_fit},
        {"ccd-sim", "simulate register images, readouts and correlations",
         {species,
          scheme,
          {"ion_lambda0", Kind::NumberList, "per-ion mean bright counts"},
          {"alpha1", Kind::Number, "dark-state leak probability"},
          {"alpha2", Kind::Number, "bright-state leak probability"},
          {"eta", Kind::Number, "collection efficiency"},
          {"crosstalk_eps", Kind::Number, "fraction routed into each neighbour"},
          {"trials", Kind::Integer, "register readouts"},
          {"seed", Kind::Integer, "random seed"},
          {"threads", Kind::Integer, "worker threads (0 = all cores)"},
          {"gain_g", Kind::Number, "mean counts per photoelectron"},
          {"readout_rms_r", Kind::Number, "readout noise per super-pixel"},
          {"bin_factor", Kind::Integer, "on-chip binning"},
          {"offset", Kind::Number, "pedestal per super-pixel"},
          {"counts_per_photon", Kind::Number, "integrated counts per photon"},
          {"psf_sigma", Kind::Number, "PSF width, super-pixels"},
          {"gain_dist", Kind::Text, "exponential or fixed"},
          {"roi_size", Kind::Integer, "ROI edge, super-pixels"},
          out_req,
          {"report", Kind::Text, "correlation report path (stdout when omitted)"},
          {"frame_pgm", Kind::Text, "write an all-bright example frame"}},
         cmd_ccd_sim},
        {"crosstalk", "neighbour fluorescence relative to the laser",
         {{"wavelength_nm", Kind::Number, "wavelength, nm"}, {"spacing_um", Kind::Number, "ion spacing, um"}, out_opt},
         cmd_crosstalk},
    };
}

json load_config(const std::string& path, const std::vector<Key>& keys)
{
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!doc.is_object())
        throw ConfigError("config '" + path + "' must be a JSON object");
    for (const auto& [name, value] : doc.items()) {
        const bool known = std::any_of(keys.begin(), keys.end(), [&](const Key& k) { return k.name == name; });
        if (!known)
            throw ConfigError("unknown config key '" + name + "'");
    }
    return doc;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    const auto table = commands();
    CLI::App app{"Trapped-ion qubit detection models"};
    app.require_subcommand(1);

    // Option storage per command and key; std::map keeps addresses stable.
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::map<std::string, std::string> config_paths;
    std::vector<std::pair<const Command*, CLI::App*>> subs;
    for (const Command& cmd : table) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.description);
        sub->add_option("--config", config_paths[cmd.name], "JSON config; flags override its keys");
        for (const Key& key : cmd.keys) {
            const std::string id = cmd.name + "/" + key.name;
            if (key.kind == Kind::Flag)
                sub->add_flag("--" + dashed(key.name), flags[id], key.help);
            else
                sub->add_option("--" + dashed(key.name), raw[id], key.help);
        }
        subs.emplace_back(&cmd, sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty())
        reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        for (const auto& [cmd, sub] : subs) {
            if (!sub->parsed())
                continue;
            json values = json::object();
            if (!config_paths[cmd->name].empty())
                values = load_config(config_paths[cmd->name], cmd->keys);
            for (const Key& key : cmd->keys) {
                const std::string id = cmd->name + "/" + key.name;
                if (sub->count("--" + dashed(key.name)) == 0)
                    continue;
                values[key.name] = key.kind == Kind::Flag ? json(flags[id]) : parse_value(key, raw[id]);
            }
            return cmd->run(Settings(std::move(values)), out);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace iondetect::cli

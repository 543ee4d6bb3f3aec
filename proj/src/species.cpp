#include "iondetect/species.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "iondetect/errors.hpp"

namespace iondetect {

using json = nlohmann::json;

const ExcitedLine& IonSpecies::line(Scheme scheme) const
{
    const auto& l = scheme == Scheme::P32 ? p32 : p12;
    if (!l)
        throw ConfigError("species " + name + " has no " + to_string(scheme) + " line data");
    return *l;
}

void IonSpecies::validate() const
{
    auto positive = [&](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError("species " + name + ": " + what + " must be positive");
    };
    positive(omega_hfs, "hfs");
    if (nuclear_spin.twice() <= 0)
        throw ConfigError("species " + name + ": nuclear_spin must be positive");
    for (const auto* l : {&p32, &p12}) {
        if (!*l)
            continue;
        positive((*l)->gamma, "gamma");
        positive((*l)->omega_hfp, "hfp");
        positive((*l)->wavelength_nm, "wavelength");
    }
}

const std::vector<IonSpecies>& builtin_species()
{
    static const std::vector<IonSpecies> registry = [] {
        std::vector<IonSpecies> r;
        // 111Cd+: Delta1 = 14.5 GHz - 0.8 GHz = 13.7 GHz.
        r.push_back({"Cd111", HalfInt::half(1), ghz_to_rad_s(14.5),
                     ExcitedLine{mhz_to_rad_s(60.0), mhz_to_rad_s(800.0), 214.5},
                     ExcitedLine{mhz_to_rad_s(50.0), ghz_to_rad_s(2.0), 226.5}});
        r.push_back({"Yb171", HalfInt::half(1), ghz_to_rad_s(12.6), std::nullopt,
                     ExcitedLine{mhz_to_rad_s(23.0), ghz_to_rad_s(2.1), 369.5}});
        r.push_back({"Hg199", HalfInt::half(1), ghz_to_rad_s(40.5), std::nullopt,
                     ExcitedLine{mhz_to_rad_s(70.0), ghz_to_rad_s(6.9), 194.0}});
        return r;
    }();
    return registry;
}

namespace {

std::string normalize_name(const std::string& s)
{
    std::string letters, digits;
    for (unsigned char c : s) {
        if (std::isalpha(c))
            letters += static_cast<char>(std::tolower(c));
        else if (std::isdigit(c))
            digits += static_cast<char>(c);
    }
    return letters + digits;
}

const char* const kSpeciesKeys[] = {
    "name",          "nuclear_spin",  "hfs_ghz",
    "gamma_p32_mhz", "hfp32_mhz",     "wavelength_p32_nm",
    "gamma_p12_mhz", "hfp12_mhz",     "wavelength_p12_nm",
};

double number(const json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_number())
        throw ConfigError(std::string("species key '") + key + "' must be a number");
    return v.get<double>();
}

std::optional<ExcitedLine> read_line(const json& j, const char* gamma, const char* hfp,
                                     const char* wavelength)
{
    const int present = j.contains(gamma) + j.contains(hfp) + j.contains(wavelength);
    if (present == 0)
        return std::nullopt;
    if (present != 3)
        throw ConfigError(std::string("species line needs all of ") + gamma + ", " + hfp +
                          ", " + wavelength);
    return ExcitedLine{mhz_to_rad_s(number(j, gamma)), mhz_to_rad_s(number(j, hfp)),
                       number(j, wavelength)};
}

IonSpecies species_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("species entry must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(std::begin(kSpeciesKeys), std::end(kSpeciesKeys), key) ==
            std::end(kSpeciesKeys))
            throw ConfigError("unknown species key '" + key + "'");
    }
    IonSpecies s;
    if (!j.contains("name") || !j["name"].is_string())
        throw ConfigError("species key 'name' is required");
    s.name = j["name"].get<std::string>();
    if (!j.contains("nuclear_spin"))
        throw ConfigError("species key 'nuclear_spin' is required");
    const auto& spin = j["nuclear_spin"];
    try {
        s.nuclear_spin = spin.is_string() ? parse_half_int(spin.get<std::string>())
                                          : half_int_from_double(spin.get<double>());
    } catch (const std::exception&) {
        throw ConfigError("species key 'nuclear_spin' is not a multiple of 1/2");
    }
    if (!j.contains("hfs_ghz"))
        throw ConfigError("species key 'hfs_ghz' is required");
    s.omega_hfs = ghz_to_rad_s(number(j, "hfs_ghz"));
    s.p32 = read_line(j, "gamma_p32_mhz", "hfp32_mhz", "wavelength_p32_nm");
    s.p12 = read_line(j, "gamma_p12_mhz", "hfp12_mhz", "wavelength_p12_nm");
    s.validate();
    return s;
}

json species_to_json(const IonSpecies& s)
{
    json j;
    j["name"] = s.name;
    j["nuclear_spin"] = s.nuclear_spin.str();
    j["hfs_ghz"] = s.omega_hfs / ghz_to_rad_s(1.0);
    if (s.p32) {
        j["gamma_p32_mhz"] = rad_s_to_mhz(s.p32->gamma);
        j["hfp32_mhz"] = rad_s_to_mhz(s.p32->omega_hfp);
        j["wavelength_p32_nm"] = s.p32->wavelength_nm;
    }
    if (s.p12) {
        j["gamma_p12_mhz"] = rad_s_to_mhz(s.p12->gamma);
        j["hfp12_mhz"] = rad_s_to_mhz(s.p12->omega_hfp);
        j["wavelength_p12_nm"] = s.p12->wavelength_nm;
    }
    return j;
}

json parse(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed species document: ") + e.what());
    }
}

}  // namespace

IonSpecies find_species(const std::string& name)
{
    const std::string key = normalize_name(name);
    for (const auto& s : builtin_species()) {
        const std::string n = normalize_name(s.name);
        // "Cd111", "111Cd+" and the bare element all match.
        const std::string letters = n.substr(0, n.find_first_of("0123456789"));
        if (key == n || key == letters)
            return s;
    }
    throw ConfigError("unknown species '" + name + "'");
}

IonSpecies species_from_json_text(const std::string& text)
{
    return species_from_json(parse(text));
}

std::string species_to_json_text(const IonSpecies& species)
{
    return species_to_json(species).dump(2);
}

std::vector<IonSpecies> registry_from_json_text(const std::string& text)
{
    const json j = parse(text);
    if (!j.is_object() || !j.contains("species") || !j["species"].is_array())
        throw ConfigError("registry document needs a 'species' array");
    for (const auto& [key, _] : j.items())
        if (key != "species")
            throw ConfigError("unknown registry key '" + key + "'");
    std::vector<IonSpecies> out;
    for (const auto& entry : j["species"])
        out.push_back(species_from_json(entry));
    return out;
}

std::string registry_to_json_text(const std::vector<IonSpecies>& registry)
{
    json arr = json::array();
    for (const auto& s : registry)
        arr.push_back(species_to_json(s));
    return json{{"species", arr}}.dump(2);
}

}  // namespace iondetect

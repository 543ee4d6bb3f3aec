#include "iondetect/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "iondetect/errors.hpp"

namespace iondetect {

std::string format_number(double value)
{
    return fmt::format("{:.9g}", value);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string histogram_to_csv(const PhotonHistogram& h)
{
    std::string out;
    if (h.trials || h.seed || !h.mode.empty()) {
        out += "#";
        if (h.trials)
            out += fmt::format(" trials={}", *h.trials);
        if (h.seed)
            out += fmt::format(" seed={}", *h.seed);
        if (!h.mode.empty())
            out += fmt::format(" mode={}", h.mode);
        out += "\n";
    }
    out += "n,count\n";
    for (std::size_t n = 0; n < h.values.size(); ++n)
        if (h.values[n] != 0.0)
            out += fmt::format("{},{}\n", n, format_number(h.values[n]));
    return out;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

PhotonHistogram histogram_from_csv(const std::string& text)
{
    PhotonHistogram h;
    h.kind = HistogramKind::Measured;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string kv;
            while (meta >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    continue;
                const std::string key = kv.substr(0, eq);
                const std::string value = kv.substr(eq + 1);
                try {
                    if (key == "trials")
                        h.trials = std::stoull(value);
                    else if (key == "seed")
                        h.seed = std::stoull(value);
                    else if (key == "mode")
                        h.mode = value;
                } catch (const std::logic_error&) {
                    throw ConfigError(fmt::format("histogram line {}: bad metadata '{}'", line_no, kv));
                }
            }
            continue;
        }
        if (!header) {
            if (line != "n,count")
                throw ConfigError(fmt::format("histogram line {}: expected header 'n,count'", line_no));
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError(fmt::format("histogram line {}: expected 'n,count'", line_no));
        long long n;
        double count;
        try {
            std::size_t used = 0;
            n = std::stoll(line.substr(0, comma), &used);
            count = std::stod(line.substr(comma + 1));
        } catch (const std::logic_error&) {
            throw ConfigError(fmt::format("histogram line {}: not a number", line_no));
        }
        if (n < 0 || !(count >= 0.0))
            throw ConfigError(fmt::format("histogram line {}: negative bin or count", line_no));
        if (static_cast<std::size_t>(n) >= h.values.size())
            h.values.resize(static_cast<std::size_t>(n) + 1, 0.0);
        h.values[static_cast<std::size_t>(n)] += count;
    }
    if (!header)
        throw ConfigError("histogram has no 'n,count' header");
    if (h.trials)
        h.kind = HistogramKind::Simulated;
    return h;
}

std::string distributions_to_csv(const std::vector<double>& dark, const std::vector<double>& bright)
{
    std::string out = "n,p_dark,p_bright\n";
    const std::size_t n = std::max(dark.size(), bright.size());
    for (std::size_t i = 0; i < n; ++i)
        out += fmt::format("{},{},{}\n", i, format_number(i < dark.size() ? dark[i] : 0.0),
                           format_number(i < bright.size() ? bright[i] : 0.0));
    return out;
}

std::string curve_to_csv(const std::vector<CurveRow>& rows)
{
    std::string out = "eta,infidelity_numeric,infidelity_approx,lambda0_opt,d_opt\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{}\n", format_number(r.eta),
                           format_number(r.infidelity_numeric), format_number(r.infidelity_approx),
                           format_number(r.lambda0_opt), r.d_opt);
    return out;
}

std::string fidelity_table_to_csv(const std::vector<Table1Row>& rows)
{
    std::string out = "species,eta,fidelity,dark_fidelity,bright_fidelity,lambda0_opt,d_opt\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{},{},{}\n", r.species, format_number(r.eta),
                           format_number(r.result.fidelity), format_number(r.result.dark_fidelity),
                           format_number(r.result.bright_fidelity),
                           format_number(r.result.lambda0_opt), r.result.d);
    return out;
}

std::string readouts_to_csv(const std::vector<RegisterReadout>& readouts)
{
    std::string out = "trial,ion,roi_sum,bit\n";
    for (std::size_t t = 0; t < readouts.size(); ++t)
        for (std::size_t i = 0; i < readouts[t].bits.size(); ++i)
            out += fmt::format("{},{},{},{}\n", t, i, format_number(readouts[t].roi_sums[i]),
                               readouts[t].bits[i]);
    return out;
}

std::string frame_to_pgm(const CcdFrame& frame)
{
    const CcdParams& m = frame.meta;
    std::string out = "P5\n";
    out += fmt::format(
        "# g={} r={} bin={} k={} offset={} counts_per_photon={} psf_sigma={} gain_dist={} seed={}\n",
        format_number(m.gain_g), format_number(m.readout_rms_r), m.bin_factor, m.roi_super_pixels,
        format_number(m.offset), format_number(m.counts_per_photon), format_number(m.psf_sigma),
        to_string(m.gain_dist), frame.seed);
    out += fmt::format("{} {}\n65535\n", frame.width, frame.height);
    out.reserve(out.size() + 2 * frame.pixels.size());
    for (std::uint16_t v : frame.pixels) {
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

CcdFrame frame_from_pgm(const std::string& bytes)
{
    std::size_t pos = 0;
    std::map<std::string, std::string> meta;
    auto next_token = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos])))
                ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                const auto eol = bytes.find('\n', pos);
                std::istringstream line(bytes.substr(pos + 1, eol - pos - 1));
                std::string kv;
                while (line >> kv) {
                    const auto eq = kv.find('=');
                    if (eq != std::string::npos)
                        meta[kv.substr(0, eq)] = kv.substr(eq + 1);
                }
                pos = eol == std::string::npos ? bytes.size() : eol + 1;
                continue;
            }
            break;
        }
        const auto start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])))
            ++pos;
        return bytes.substr(start, pos - start);
    };
    if (next_token() != "P5")
        throw ConfigError("not a binary PGM (P5) image");
    CcdFrame f;
    try {
        f.width = std::stoi(next_token());
        f.height = std::stoi(next_token());
        if (std::stoi(next_token()) != 65535)
            throw ConfigError("PGM maxval must be 65535");
    } catch (const std::logic_error&) {
        throw ConfigError("malformed PGM header");
    }
    ++pos;  // single whitespace before the raster
    const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
    if (f.width < 1 || f.height < 1 || bytes.size() < pos + 2 * n)
        throw ConfigError("PGM raster is truncated");
    f.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        f.pixels[i] = static_cast<std::uint16_t>(
            (static_cast<unsigned char>(bytes[pos + 2 * i]) << 8) |
            static_cast<unsigned char>(bytes[pos + 2 * i + 1]));
    auto get = [&](const char* key, auto& field) {
        if (auto it = meta.find(key); it != meta.end()) {
            if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>)
                field = std::stoi(it->second);
            else if constexpr (std::is_same_v<std::decay_t<decltype(field)>, std::uint64_t>)
                field = std::stoull(it->second);
            else
                field = std::stod(it->second);
        }
    };
    get("g", f.meta.gain_g);
    get("r", f.meta.readout_rms_r);
    get("bin", f.meta.bin_factor);
    get("k", f.meta.roi_super_pixels);
    get("offset", f.meta.offset);
    get("counts_per_photon", f.meta.counts_per_photon);
    get("psf_sigma", f.meta.psf_sigma);
    get("seed", f.seed);
    if (auto it = meta.find("gain_dist"); it != meta.end())
        f.meta.gain_dist = parse_gain_dist(it->second);
    return f;
}

std::string fit_result_to_text(const FitResult& fit)
{
    std::string out;
    out += "eta: " + format_number(fit.eta) + "\n";
    out += "s: " + format_number(fit.s) + "\n";
    out += "p_impure: " + format_number(fit.p_impure) + "\n";
    out += "lambda_bg: " + format_number(fit.lambda_bg) + "\n";
    out += "neg_log_likelihood: " + format_number(fit.neg_log_likelihood) + "\n";
    out += std::string("converged: ") + (fit.converged ? "true" : "false") + "\n";
    out += "iterations: " + std::to_string(fit.iterations) + "\n";
    if (!fit.note.empty())
        out += "note: " + fit.note + "\n";
    return out;
}

std::string model_rows_to_csv(const std::vector<ModelRow>& rows)
{
    std::string out = "state,n,observed,expected,residual\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{}\n", to_string(r.state), r.n, format_number(r.observed),
                           format_number(r.expected), format_number(r.residual));
    return out;
}

}  // namespace iondetect

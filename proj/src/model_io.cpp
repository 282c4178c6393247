#include "pinn/model_io.hpp"

#include "pinn/errors.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace pinn::io {

namespace {

constexpr std::string_view kMagic = "PINN-RUL-MODEL";
constexpr std::string_view kEndHeader = "end-header";

std::string hexf(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_real(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) throw parse_error("model file: bad real '" + tok + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& tok) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (tok.empty() || end != tok.c_str() + tok.size()) {
        throw parse_error("model file: bad integer '" + tok + "'");
    }
    return v;
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& xs, Fn&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += ',';
        out += fmt(xs[i]);
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = s.find(sep, pos);
        out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

std::string spec_line(const net::MlpSpec& s) {
    return join(s.widths, [](int w) { return std::to_string(w); }) + " " + std::string(net::to_string(s.hidden)) +
           " " + std::string(net::to_string(s.output));
}

net::MlpSpec parse_spec(const std::string& value) {
    const auto parts = split(value, ' ');
    if (parts.size() != 3) throw parse_error("model file: bad network spec '" + value + "'");
    net::MlpSpec s;
    for (const auto& w : split(parts[0], ',')) s.widths.push_back(static_cast<int>(parse_u64(w)));
    try {
        s.hidden = net::parse_activation(parts[1]);
        s.output = net::parse_activation(parts[2]);
        s.validate();
    } catch (const contract_error& e) {
        throw parse_error(std::string("model file: ") + e.what());
    }
    return s;
}

void put_f64(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>(bits & 0xffU));
        bits >>= 8;
    }
}

double get_f64(std::string_view in, std::size_t& pos) {
    if (pos + 8 > in.size()) throw parse_error("model file: truncated parameter body");
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) | static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)]);
    }
    pos += 8;
    return std::bit_cast<double>(bits);
}

void put_params(std::string& out, const net::MlpParams& p) {
    for (const auto& l : p.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put_f64(out, l.weight(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_f64(out, l.bias(r));
    }
}

net::MlpParams get_params(std::string_view in, std::size_t& pos, const net::MlpSpec& spec) {
    net::MlpParams p = net::zeros_like(spec);
    for (auto& l : p.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = get_f64(in, pos);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = get_f64(in, pos);
    }
    return p;
}

}  // namespace

std::string encode_model(const ModelFile& file) {
    const auto& m = file.model;
    m.validate();
    const auto& c = m.config;
    std::ostringstream h;
    h << kMagic << '\n';
    h << "format-version " << kModelFormatVersion << '\n';
    h << "d_oc " << c.d_oc << '\n';
    h << "x-spec " << spec_line(c.x_spec) << '\n';
    h << "rul-spec " << spec_line(c.rul_spec) << '\n';
    h << "dyn-spec " << spec_line(c.dyn_spec) << '\n';
    h << "lambda " << hexf(c.lambda) << '\n';
    h << "t-scale " << hexf(c.t_scale) << '\n';
    h << "init-scheme " << net::to_string(file.scheme) << '\n';
    h << "init-seed " << file.init_seed << '\n';
    h << "split-seed " << file.split_seed << '\n';
    h << "columns " << join(m.norm.columns, [](int v) { return std::to_string(v); }) << '\n';
    h << "norm-means " << join(m.norm.means, hexf) << '\n';
    h << "norm-stds " << join(m.norm.stds, hexf) << '\n';
    h << "rul-max " << hexf(m.norm.rul_max) << '\n';
    h << "param-count "
      << m.x_params.scalar_count() + m.rul_params.scalar_count() + m.dyn_params.scalar_count() << '\n';
    h << kEndHeader << '\n';

    std::string out = h.str();
    put_params(out, m.x_params);
    put_params(out, m.rul_params);
    put_params(out, m.dyn_params);
    return out;
}

ModelFile decode_model(std::string_view bytes) {
    std::map<std::string, std::string> fields;
    std::size_t pos = 0;
    bool first = true;
    bool ended = false;
    while (pos < bytes.size()) {
        const std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) break;
        const std::string line(bytes.substr(pos, nl - pos));
        pos = nl + 1;
        if (first) {
            if (line != kMagic) throw parse_error("not a model file (bad magic)");
            first = false;
            continue;
        }
        if (line == kEndHeader) {
            ended = true;
            break;
        }
        const auto sp = line.find(' ');
        if (sp == std::string::npos) throw parse_error("model file: malformed header line '" + line + "'");
        fields[line.substr(0, sp)] = line.substr(sp + 1);
    }
    if (first) throw parse_error("not a model file (empty)");
    if (!ended) throw parse_error("model file: header not terminated");

    auto get = [&](const std::string& key) -> const std::string& {
        auto it = fields.find(key);
        if (it == fields.end()) throw parse_error("model file: missing header field '" + key + "'");
        return it->second;
    };

    if (parse_u64(get("format-version")) != static_cast<std::uint64_t>(kModelFormatVersion)) {
        throw parse_error("model file: unsupported format version " + get("format-version"));
    }

    ModelFile f;
    auto& c = f.model.config;
    c.d_oc = static_cast<int>(parse_u64(get("d_oc")));
    c.x_spec = parse_spec(get("x-spec"));
    c.rul_spec = parse_spec(get("rul-spec"));
    c.dyn_spec = parse_spec(get("dyn-spec"));
    c.lambda = parse_real(get("lambda"));
    c.t_scale = parse_real(get("t-scale"));
    try {
        f.scheme = net::parse_init_scheme(get("init-scheme"));
    } catch (const contract_error& e) {
        throw parse_error(std::string("model file: ") + e.what());
    }
    f.init_seed = parse_u64(get("init-seed"));
    f.split_seed = parse_u64(get("split-seed"));

    auto& n = f.model.norm;
    for (const auto& s : split(get("columns"), ',')) n.columns.push_back(static_cast<int>(parse_u64(s)));
    for (const auto& s : split(get("norm-means"), ',')) n.means.push_back(parse_real(s));
    for (const auto& s : split(get("norm-stds"), ',')) n.stds.push_back(parse_real(s));
    n.rul_max = parse_real(get("rul-max"));

    f.model.x_params = get_params(bytes, pos, c.x_spec);
    f.model.rul_params = get_params(bytes, pos, c.rul_spec);
    f.model.dyn_params = get_params(bytes, pos, c.dyn_spec);
    if (pos != bytes.size()) throw parse_error("model file: trailing bytes after parameter body");

    const std::uint64_t declared = parse_u64(get("param-count"));
    const std::size_t actual =
        f.model.x_params.scalar_count() + f.model.rul_params.scalar_count() + f.model.dyn_params.scalar_count();
    if (declared != actual) throw parse_error("model file: param-count does not match specs");

    try {
        f.model.validate();
    } catch (const contract_error& e) {
        throw parse_error(std::string("model file: ") + e.what());
    }
    if (n.columns.size() != n.means.size()) throw parse_error("model file: column/normalization size mismatch");
    return f;
}

void save_model(const std::string& path, const ModelFile& file) {
    const auto bytes = encode_model(file);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_model(ss.str());
}

}  // namespace pinn::io

#include "ampere/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ampere/forms.hpp"
#include "json.hpp"

namespace ampere {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "ACPP1";

json header_json(const GridDomain& d, const std::string& kind, const Bidegree& bideg, int components, int degree) {
    json h;
    h["magic"] = kMagic;
    h["kind"] = kind;
    h["shape"] = {d.resolution()[0], d.resolution()[1], d.resolution()[2], d.resolution()[3]};
    json bb = json::array();
    for (const auto& iv : d.bbox()) bb.push_back({iv.lo, iv.hi});
    h["bbox"] = bb;
    h["bidegree"] = bideg ? json{bideg->first, bideg->second} : json(nullptr);
    h["components"] = components;
    if (kind == "form") h["degree"] = degree;
    // Densities are always against dx¹∧dx²∧dx³∧dx⁴.
    h["volume_element"] = "coordinate";
    return h;
}

void put_doubles(std::ofstream& out, const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto bits = std::bit_cast<std::uint64_t>(p[i]);
            bits = __builtin_bswap64(bits);
            out.write(reinterpret_cast<const char*>(&bits), 8);
        }
    }
}

void get_doubles(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) throw Error("truncated payload");
    if constexpr (std::endian::native != std::endian::little) {
        for (std::size_t i = 0; i < n; ++i) {
            auto bits = std::bit_cast<std::uint64_t>(p[i]);
            p[i] = std::bit_cast<double>(__builtin_bswap64(bits));
        }
    }
}

std::ofstream open_out(const std::string& path, const json& h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path);
    out << h.dump() << '\n';
    return out;
}

FieldHeader parse_header(const std::string& line) {
    FieldHeader fh;
    try {
        const json h = json::parse(line);
        if (h.at("magic").get<std::string>() != kMagic) throw Error("bad header");
        fh.kind = h.at("kind").get<std::string>();
        if (fh.kind != "scalar" && fh.kind != "form" && fh.kind != "measure") throw Error("bad header");
        const auto& shape = h.at("shape");
        const auto& bbox = h.at("bbox");
        if (shape.size() != 4 || bbox.size() != 4) throw Error("bad header");
        for (int i = 0; i < 4; ++i) {
            fh.shape[i] = shape[i].get<int>();
            fh.bbox[i] = {bbox[i].at(0).get<double>(), bbox[i].at(1).get<double>()};
        }
        const auto& b = h.at("bidegree");
        if (!b.is_null()) fh.bidegree = std::make_pair(b.at(0).get<int>(), b.at(1).get<int>());
        fh.components = h.at("components").get<int>();
        if (fh.components < 1) throw Error("bad header");
        fh.degree = h.value("degree", 0);
    } catch (const json::exception&) {
        throw Error("bad header");
    }
    return fh;
}

std::ifstream open_in(const std::string& path, FieldHeader& fh) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("bad header");
    fh = parse_header(line);
    return in;
}

DomainPtr domain_for(const FieldHeader& fh, DomainPtr given) {
    if (given) {
        if (given->resolution() != fh.shape) throw Error("shape mismatch");
        return given;
    }
    return GridDomain::build(fh.bbox, fh.shape);
}

void expect_end(std::ifstream& in) {
    if (in.peek() != std::char_traits<char>::eof()) throw Error("shape mismatch");
}

}  // namespace

void save_field(const ScalarField& f, const std::string& path) {
    auto out = open_out(path, header_json(*f.domain, "scalar", std::nullopt, 1, 0));
    put_doubles(out, f.values.data(), f.values.size());
}

void save_field(const FormField& f, const std::string& path) {
    auto out = open_out(path, header_json(*f.domain, "form", f.bidegree, f.components, f.degree));
    put_doubles(out, reinterpret_cast<const double*>(f.coeffs.data()), 2 * f.coeffs.size());
}

void save_field(const MeasureField& f, const std::string& path) {
    {
        auto out = open_out(path, header_json(*f.domain, "measure", std::make_pair(2, 2), 1, 0));
        put_doubles(out, f.density.data(), f.density.size());
    }
    ScalarField mask(f.domain);
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = f.valid[k] ? 1.0 : 0.0;
    save_field(mask, path + ".mask");
}

void save_components(const DomainPtr& d, const std::vector<double>& values, int components, const std::string& path) {
    if (values.size() != d->size() * static_cast<std::size_t>(components)) throw Error("shape mismatch");
    auto out = open_out(path, header_json(*d, "scalar", std::nullopt, components, 0));
    put_doubles(out, values.data(), values.size());
}

FieldHeader read_header(const std::string& path) {
    FieldHeader fh;
    open_in(path, fh);
    return fh;
}

ScalarField load_scalar(const std::string& path, DomainPtr domain) {
    FieldHeader fh;
    auto in = open_in(path, fh);
    if (fh.kind != "scalar" || fh.components != 1) throw Error("bad header");
    ScalarField f(domain_for(fh, std::move(domain)));
    get_doubles(in, f.values.data(), f.values.size());
    expect_end(in);
    return f;
}

FormField load_form(const std::string& path, DomainPtr domain) {
    FieldHeader fh;
    auto in = open_in(path, fh);
    if (fh.kind != "form" || fh.degree < 0 || fh.degree > 4 || fh.components != forms::binom(fh.degree))
        throw Error("bad header");
    FormField f(domain_for(fh, std::move(domain)), fh.degree, fh.bidegree);
    get_doubles(in, reinterpret_cast<double*>(f.coeffs.data()), 2 * f.coeffs.size());
    expect_end(in);
    std::fill(f.valid.begin(), f.valid.end(), 1);
    return f;
}

MeasureField load_measure(const std::string& path, DomainPtr domain) {
    FieldHeader fh;
    auto in = open_in(path, fh);
    if (fh.kind != "measure" || fh.components != 1) throw Error("bad header");
    MeasureField m(domain_for(fh, std::move(domain)));
    get_doubles(in, m.density.data(), m.density.size());
    expect_end(in);
    std::ifstream probe(path + ".mask");
    if (probe) {
        const ScalarField mask = load_scalar(path + ".mask", m.domain);
        for (std::size_t k = 0; k < mask.size(); ++k) m.valid[k] = mask[k] != 0.0;
    } else {
        std::fill(m.valid.begin(), m.valid.end(), 1);
    }
    return m;
}

std::vector<double> load_components(const std::string& path, int& components, DomainPtr domain) {
    FieldHeader fh;
    auto in = open_in(path, fh);
    if (fh.kind != "scalar") throw Error("bad header");
    const DomainPtr d = domain_for(fh, std::move(domain));
    components = fh.components;
    std::vector<double> v(d->size() * static_cast<std::size_t>(components));
    get_doubles(in, v.data(), v.size());
    expect_end(in);
    return v;
}

}  // namespace ampere

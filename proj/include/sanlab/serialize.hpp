#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "sanlab/san.hpp"

namespace sanlab {

/// Exact text form of a double (hex-float); round-trips bitwise via strtod.
inline std::string format_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

/// Shortest decimal form that round-trips a double; used for CSV output.
inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& token) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw parse_error("not a number: '" + token + "'");
    return v;
}

namespace detail {

class TokenReader {
public:
    explicit TokenReader(std::istream& in, std::string context)
        : in_(in), context_(std::move(context)) {}

    std::string next() {
        std::string token;
        if (!(in_ >> token))
            throw parse_error(context_ + ": unexpected end of file");
        return token;
    }

    void expect(const std::string& literal) {
        const std::string token = next();
        if (token != literal)
            throw parse_error(context_ + ": expected '" + literal +
                              "', found '" + token + "'");
    }

    std::size_t next_count() {
        const std::string token = next();
        try {
            return static_cast<std::size_t>(std::stoull(token));
        } catch (const std::exception&) {
            throw parse_error(context_ + ": expected a count, found '" + token +
                              "'");
        }
    }

    double next_double() { return parse_double(next()); }

private:
    std::istream& in_;
    std::string context_;
};

inline void write_sparsity(std::ostream& out, const SparsityParam& param) {
    if (std::holds_alternative<NoParam>(param)) {
        out << "sparsity None\n";
    } else if (const auto* p = std::get_if<TopK>(&param)) {
        out << "sparsity TopK k " << p->k << "\n";
    } else if (const auto* p = std::get_if<PoolSize>(&param)) {
        out << "sparsity PoolSize m " << p->m << "\n";
    } else if (const auto* p = std::get_if<MinDistance>(&param)) {
        out << "sparsity MinDistance med " << p->med << " border_tol "
            << p->border_tol << "\n";
    }
}

inline SparsityParam read_sparsity(TokenReader& reader) {
    reader.expect("sparsity");
    const std::string kind = reader.next();
    if (kind == "None") return NoParam{};
    if (kind == "TopK") {
        reader.expect("k");
        return TopK{reader.next_count()};
    }
    if (kind == "PoolSize") {
        reader.expect("m");
        return PoolSize{reader.next_count()};
    }
    if (kind == "MinDistance") {
        reader.expect("med");
        const std::size_t med = reader.next_count();
        reader.expect("border_tol");
        return MinDistance{med, reader.next_count()};
    }
    throw parse_error("unknown sparsity kind '" + kind + "'");
}

} // namespace detail

inline void write_model(std::ostream& out, const SanModel& model) {
    validate_model(model);
    out << "sanlab-model 1\n";
    out << "rank " << model.rank << "\n";
    out << "activation " << to_string(model.activation) << "\n";
    out << "q " << model.kernels.size() << "\n";
    for (std::size_t i = 0; i < model.kernels.size(); ++i) {
        const Tensor& w = model.kernels[i];
        out << "kernel " << i << " extents";
        for (std::size_t a = 0; a < w.rank(); ++a) out << " " << w.extent(a);
        out << "\n";
        detail::write_sparsity(out, model.sparsity[i]);
        out << "values " << w.size() << "\n";
        for (std::size_t j = 0; j < w.size(); ++j)
            out << format_hex(w[j]) << "\n";
    }
}

inline SanModel read_model(std::istream& in, const std::string& context) {
    detail::TokenReader reader(in, context);
    reader.expect("sanlab-model");
    reader.expect("1");
    SanModel model;
    reader.expect("rank");
    model.rank = reader.next_count();
    if (model.rank < 1 || model.rank > 2)
        throw parse_error(context + ": rank must be 1 or 2");
    reader.expect("activation");
    const std::string name = reader.next();
    const auto kind = parse_activation(name);
    if (!kind) throw parse_error(context + ": unknown activation '" + name + "'");
    model.activation = *kind;
    reader.expect("q");
    const std::size_t q = reader.next_count();
    if (q < 1) throw parse_error(context + ": q must be >= 1");
    for (std::size_t i = 0; i < q; ++i) {
        reader.expect("kernel");
        if (reader.next_count() != i)
            throw parse_error(context + ": kernel records out of order");
        reader.expect("extents");
        std::vector<std::size_t> extents;
        for (std::size_t a = 0; a < model.rank; ++a)
            extents.push_back(reader.next_count());
        model.sparsity.push_back(detail::read_sparsity(reader));
        reader.expect("values");
        const std::size_t count = reader.next_count();
        std::vector<double> values;
        values.reserve(count);
        for (std::size_t j = 0; j < count; ++j)
            values.push_back(reader.next_double());
        model.kernels.emplace_back(std::move(extents), std::move(values));
    }
    validate_model(model);
    return model;
}

inline void save_model(const SanModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open model file for writing: " + path);
    write_model(out, model);
    if (!out) throw io_error("failed writing model file: " + path);
}

inline SanModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open model file: " + path);
    return read_model(in, path);
}

inline void write_sparse_map(std::ostream& out, const SparseMap& map) {
    out << "sanlab-sparsemap 1\n";
    out << "rank " << map.extents.size() << "\n";
    out << "extents";
    for (std::size_t e : map.extents) out << " " << e;
    out << "\n";
    out << "entries " << map.entries.size() << "\n";
    for (const auto& [idx, value] : map.entries)
        out << idx << " " << format_hex(value) << "\n";
}

inline SparseMap read_sparse_map(std::istream& in, const std::string& context) {
    detail::TokenReader reader(in, context);
    reader.expect("sanlab-sparsemap");
    reader.expect("1");
    SparseMap map;
    reader.expect("rank");
    const std::size_t rank = reader.next_count();
    if (rank < 1 || rank > 2)
        throw parse_error(context + ": rank must be 1 or 2");
    reader.expect("extents");
    for (std::size_t a = 0; a < rank; ++a)
        map.extents.push_back(reader.next_count());
    reader.expect("entries");
    const std::size_t count = reader.next_count();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = reader.next_count();
        map.entries.emplace_back(idx, reader.next_double());
    }
    tensor_from_sparse(map); // validates ordering, range and nonzero values
    return map;
}

inline void save_sparse_map(const SparseMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open sparse map file for writing: " + path);
    write_sparse_map(out, map);
    if (!out) throw io_error("failed writing sparse map file: " + path);
}

inline SparseMap load_sparse_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open sparse map file: " + path);
    return read_sparse_map(in, path);
}

} // namespace sanlab

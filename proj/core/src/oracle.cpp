#include "gexp/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

#include "gexp/csv.hpp"

namespace gexp {

GExpectationOracle::GExpectationOracle(Generator g, Eigen::Index n, Eigen::Index d, QuadratureOptions quad)
    : g_(std::move(g)), n_(n), d_(d), quad_(quad) {
    if (!g_.closed_form_class()) {
        throw Error(ErrorCode::unsupported_generator,
                    g_.name() + " is not deterministic, y-independent and zero at z = 0");
    }
}

RConditionalValue GExpectationOracle::eval_R(const RTerminal& xi, double t) const {
    require(xi.n() == n_ && xi.d() == d_, ErrorCode::invalid_argument, "terminal dimensions differ from the oracle");
    return cond_gexp_R(g_, xi, t, quad_);
}

FaultOracle::FaultOracle(std::shared_ptr<const ExpectationOracle> base, double offset, FaultMode mode)
    : base_(std::move(base)), offset_(offset), mode_(mode) {
    require(base_ != nullptr, ErrorCode::invalid_argument, "null base oracle");
}

RConditionalValue FaultOracle::eval_R(const RTerminal& xi, double t) const {
    RConditionalValue value = base_->eval_R(xi, t);
    if (!xi.is_constant() && (mode_ == FaultMode::all_times || t == 0.0)) {
        value.deterministic.array() += offset_;
    }
    return value;
}

std::string FaultOracle::name() const {
    return base_->name() + (mode_ == FaultMode::at_zero ? "+fault@0(" : "+fault(") + format_double(offset_) + ")";
}

std::optional<std::size_t> GFunction::find_z(const MatrixZ& zz) const {
    for (std::size_t j = 0; j < z.size(); ++j)
        if (z[j] == zz) return j;
    return std::nullopt;
}

Vector GFunction::at(double t, std::size_t j) const {
    require(t >= 0.0 && t <= grid.horizon() * (1.0 + 1e-12), ErrorCode::invalid_argument,
            "t outside the sampled range");
    if (const auto idx = grid.find(t)) return values[j][*idx];
    const std::size_t i = grid.locate(t);
    const double s = (t - grid[i]) / grid.step(i);
    return (1.0 - s) * values[j][i] + s * values[j][i + 1];
}

TableOracle::TableOracle(GFunction table, std::string label) : table_(std::move(table)), label_(std::move(label)) {
    require(!table_.z.empty(), ErrorCode::invalid_argument, "empty z sample set");
    require(table_.values.size() == table_.z.size(), ErrorCode::invalid_argument, "one G column per z expected");
}

RConditionalValue TableOracle::eval_R(const RTerminal& xi, double t) const {
    require(xi.n() == n() && xi.d() == d(), ErrorCode::invalid_argument, "terminal dimensions differ from the table");
    if (xi.is_constant()) return {xi, t, xi.y, xi.z, xi.u, xi.u};
    const auto j = table_.find_z(xi.z);
    if (!j) throw Error(ErrorCode::invalid_argument, "z is not one of the tabulated samples");
    require(xi.v <= table_.grid.horizon() * (1.0 + 1e-12), ErrorCode::invalid_argument, "v beyond the table horizon");
    const double c = std::min(std::max(t, xi.u), xi.v);
    RConditionalValue out{xi, t, xi.y + table_.at(xi.v, *j) - table_.at(c, *j), xi.z, xi.u, c};
    return out;
}

namespace {

struct Columns {
    std::size_t t;
    std::vector<std::size_t> z;
    std::vector<std::size_t> g;
};

Columns classify(const CsvTable& table, char value_prefix) {
    Columns c{table.column("t"), {}, {}};
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        const std::string& h = table.header[i];
        if (h == "t" || h == "z_index") continue;
        if (h[0] == 'z') {
            c.z.push_back(i);
        } else if (h[0] == value_prefix) {
            c.g.push_back(i);
        } else {
            throw ParseError("unexpected column '" + h + "'", 1, 1);
        }
    }
    if (c.z.empty() || c.g.empty() || c.z.size() % c.g.size() != 0) {
        throw ParseError("need n·d z columns and n value columns", 1, 1);
    }
    return c;
}

MatrixZ row_z(const std::vector<double>& row, const Columns& c) {
    const auto n = static_cast<Eigen::Index>(c.g.size());
    const auto d = static_cast<Eigen::Index>(c.z.size() / c.g.size());
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index k = 0; k < d; ++k) m(r, k) = row[c.z[static_cast<std::size_t>(r * d + k)]];
    return MatrixZ(m);
}

Vector row_values(const std::vector<double>& row, const Columns& c) {
    Vector v(static_cast<Eigen::Index>(c.g.size()));
    for (std::size_t i = 0; i < c.g.size(); ++i) v[static_cast<Eigen::Index>(i)] = row[c.g[i]];
    return v;
}

/// Rectangular (t, z) table from CSV rows in any order.
void tabulate(const CsvTable& csv, const Columns& c, std::vector<double>& times, std::vector<MatrixZ>& zs,
              std::vector<std::vector<Vector>>& values) {
    if (csv.rows.empty()) throw ParseError("no data rows", 2, 1);
    std::map<double, std::size_t> t_index;
    for (const auto& row : csv.rows) t_index.emplace(row[c.t], 0);
    times.clear();
    for (auto& [t, idx] : t_index) {
        idx = times.size();
        times.push_back(t);
    }
    zs.clear();
    std::vector<std::vector<bool>> seen;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const MatrixZ z = row_z(row, c);
        std::size_t j = 0;
        while (j < zs.size() && !(zs[j] == z)) ++j;
        if (j == zs.size()) {
            zs.push_back(z);
            values.emplace_back(times.size());
            seen.emplace_back(times.size(), false);
        }
        const std::size_t i = t_index[row[c.t]];
        if (seen[j][i]) throw ParseError("duplicate (t, z) row", csv.lines[r], 1);
        seen[j][i] = true;
        values[j][i] = row_values(row, c);
    }
    for (std::size_t j = 0; j < zs.size(); ++j)
        for (std::size_t i = 0; i < times.size(); ++i)
            if (!seen[j][i]) {
                throw ParseError("missing row for t = " + format_double(times[i]) + " and z sample " +
                                     std::to_string(j),
                                 csv.lines.back() + 1, 1);
            }
    if (times.front() != 0.0) throw ParseError("the first time must be 0", csv.lines.front(), 1);
    if (times.size() < 2) throw ParseError("need at least two times", csv.lines.front(), 1);
}

}  // namespace

GFunction read_G_csv(std::istream& in) {
    const CsvTable csv = read_csv(in);
    const Columns c = classify(csv, 'G');
    std::vector<double> times;
    std::vector<MatrixZ> zs;
    std::vector<std::vector<Vector>> values;
    tabulate(csv, c, times, zs, values);
    return {TimeGrid(times), std::move(zs), std::move(values)};
}

GFunction read_G_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + path);
    return read_G_csv(in);
}

namespace {

void write_header(std::ostream& out, Eigen::Index n, Eigen::Index d, const char* value_prefix, bool index) {
    out << 't';
    if (index) out << ",z_index";
    if (n == 1 && d == 1) {
        out << ",z," << value_prefix << '\n';
        return;
    }
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index k = 0; k < d; ++k) out << ",z" << r + 1 << '_' << k + 1;
    for (Eigen::Index r = 0; r < n; ++r) out << ',' << value_prefix << r + 1;
    out << '\n';
}

void write_row(std::ostream& out, double t, std::optional<std::size_t> index, const MatrixZ& z, const Vector& v) {
    out << format_double(t);
    if (index) out << ',' << *index;
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        for (Eigen::Index k = 0; k < z.cols(); ++k) out << ',' << format_double(z.matrix()(r, k));
    for (Eigen::Index r = 0; r < v.size(); ++r) out << ',' << format_double(v[r]);
    out << '\n';
}

}  // namespace

void write_G_csv(std::ostream& out, const GFunction& G) {
    write_header(out, G.n(), G.d(), "G", false);
    for (std::size_t j = 0; j < G.z.size(); ++j)
        for (std::size_t i = 0; i < G.grid.size(); ++i) write_row(out, G.grid[i], std::nullopt, G.z[j], G.values[j][i]);
}

namespace detail {

// Shared with recover.cpp for generator tables.
void write_indexed_table(std::ostream& out, const TimeGrid& grid, const std::vector<MatrixZ>& z,
                         const std::vector<std::vector<Vector>>& values) {
    write_header(out, z.front().rows(), z.front().cols(), "g", true);
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t i = 0; i < grid.size(); ++i) write_row(out, grid[i], j, z[j], values[j][i]);
}

void read_indexed_table(std::istream& in, std::vector<double>& times, std::vector<MatrixZ>& z,
                        std::vector<std::vector<Vector>>& values) {
    const CsvTable csv = read_csv(in);
    (void)csv.column("z_index");
    const Columns c = classify(csv, 'g');
    tabulate(csv, c, times, z, values);
}

}  // namespace detail

}  // namespace gexp

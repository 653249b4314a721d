#include "locallearn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "locallearn/rng.hpp"

namespace locallearn {

Matrix Dataset::feature_matrix() const {
    Matrix m(samples.size(), static_cast<std::size_t>(dimension));
    for (std::size_t i = 0; i < samples.size(); ++i)
        std::copy(samples[i].features.begin(), samples[i].features.end(), m.row(i).begin());
    return m;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> y(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) y[i] = samples[i].label;
    return y;
}

void Dataset::validate() const {
    require(!samples.empty(), "dataset: must be non-empty");
    require(dimension > 0, "dataset: dimension must be positive");
    std::set<int> seen;
    for (const Sample& s : samples) {
        require(static_cast<int>(s.features.size()) == dimension,
                "dataset: sample feature length does not match dimension");
        require(all_finite(s.features), "dataset: non-finite feature value");
        seen.insert(s.label);
    }
    require(std::vector<int>(seen.begin(), seen.end()) == class_ids,
            "dataset: class_ids must be exactly the labels present, sorted");
}

Dataset make_dataset(std::vector<Sample> samples) {
    Dataset ds;
    require(!samples.empty(), "make_dataset: empty sample list");
    ds.dimension = static_cast<int>(samples.front().features.size());
    std::set<int> seen;
    for (const Sample& s : samples) seen.insert(s.label);
    ds.class_ids.assign(seen.begin(), seen.end());
    ds.samples = std::move(samples);
    ds.validate();
    return ds;
}

double squared_distance(VecView x, VecView c) {
    require(x.size() == c.size(), "distance: dimension mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - c[j];
        acc += d * d;
    }
    return acc;
}

double euclidean_distance(VecView x, VecView c) {
    require(all_finite(x) && all_finite(c), "distance: non-finite input");
    return std::sqrt(squared_distance(x, c));
}

namespace {

// Class means placed pairwise `separation` apart: collinear for 1D or two
// classes, on a ring in the first two dimensions otherwise.
std::vector<std::vector<double>> blob_means(int d, int classes, double separation) {
    std::vector<std::vector<double>> means(classes, std::vector<double>(d, 0.0));
    if (classes == 2 || d == 1) {
        for (int c = 0; c < classes; ++c)
            means[c][0] = (c - (classes - 1) / 2.0) * separation;
    } else {
        const double pi = 3.14159265358979323846;
        const double radius = separation / (2.0 * std::sin(pi / classes));
        for (int c = 0; c < classes; ++c) {
            const double angle = 2.0 * pi * c / classes;
            means[c][0] = radius * std::cos(angle);
            means[c][1] = radius * std::sin(angle);
        }
    }
    return means;
}

}  // namespace

Dataset gen_blobs(int n, int d, int classes, double separation, std::uint64_t seed) {
    require(n > 0 && d > 0, "gen_blobs: n and d must be positive");
    require(classes >= 2 && n >= classes, "gen_blobs: need n >= classes >= 2");
    require(std::isfinite(separation) && separation >= 0.0, "gen_blobs: bad separation");

    const auto means = blob_means(d, classes, separation);
    Rng rng(seed);
    std::vector<Sample> samples(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int c = i % classes;
        Sample& s = samples[static_cast<std::size_t>(i)];
        s.features.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) s.features[static_cast<std::size_t>(j)] = means[c][j] + rng.normal();
        s.label = classes == 2 ? (c == 0 ? -1 : 1) : c;
    }
    return make_dataset(std::move(samples));
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

void save_csv(const Dataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("save_csv: cannot open " + path);
    for (int j = 0; j < ds.dimension; ++j) out << 'f' << j << ',';
    out << "label\n";
    for (const Sample& s : ds.samples) {
        for (double v : s.features) out << format_double(v) << ',';
        out << s.label << '\n';
    }
    if (!out) throw ParseError("save_csv: write failure on " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void parse_fail(std::size_t row, std::size_t col, const std::string& what) {
    std::ostringstream os;
    os << "load_csv: row " << row << ", column " << col << ": " << what;
    throw ParseError(os.str());
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    const std::size_t width = header.size();
    if (width < 2 || header.back() != "label") parse_fail(0, width, "malformed header, expected f0,...,label");
    for (std::size_t j = 0; j + 1 < width; ++j)
        if (header[j] != "f" + std::to_string(j)) parse_fail(0, j + 1, "malformed header field '" + header[j] + "'");
    const std::size_t d = width - 1;

    std::vector<Sample> samples;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;  // trailing newline
        const auto fields = split_fields(line);
        if (fields.size() != width) parse_fail(row, fields.size(), "ragged row, expected " + std::to_string(width) + " fields");
        Sample s;
        s.features.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            const std::string& f = fields[j];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), s.features[j]);
            if (ec != std::errc{} || p != f.data() + f.size() || !std::isfinite(s.features[j]))
                parse_fail(row, j + 1, "non-numeric feature '" + f + "'");
        }
        {
            const std::string& f = fields[d];
            const char* begin = f.data();
            const char* end = f.data() + f.size();
            if (begin != end && *begin == '+') ++begin;  // from_chars rejects a leading '+'
            auto [p, ec] = std::from_chars(begin, end, s.label);
            if (ec != std::errc{} || p != end || begin == end)
                parse_fail(row, d + 1, "unknown label '" + f + "'");
        }
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw ParseError("load_csv: no data rows in " + path);
    return make_dataset(std::move(samples));
}

}  // namespace locallearn

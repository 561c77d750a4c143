#include "cistgcn/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "cistgcn/binio.hpp"
#include "cistgcn/training.hpp"

namespace cistgcn::interpret {

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var /= static_cast<double>(v.size());
    return {m, std::sqrt(var)};
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

SaliencyMap normalize_map(const model::Interpretation::Map& map) {
    SaliencyMap out;
    out.layer = map.name;
    out.rows = map.rows;
    out.cols = map.cols;
    out.values = map.values;
    auto [m, s] = mean_std(map.values);
    out.mean = m;
    out.stddev = s;
    auto [lo_it, hi_it] = std::minmax_element(out.values.begin(), out.values.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi - lo <= 0) {
        std::fill(out.values.begin(), out.values.end(), 0.5);
    } else {
        for (auto& v : out.values) v = (v - lo) / (hi - lo);
    }
    out.normalized = true;
    return out;
}

SaliencyMap layer_average(const std::vector<model::Interpretation>& bundles,
                          const std::string& layer) {
    if (bundles.empty()) throw FormatError("layer_average: no bundles");
    const auto* first = bundles[0].find_map(layer);
    if (!first) throw FormatError("layer_average: unknown layer '" + layer + "'");
    model::Interpretation::Map acc;
    acc.name = layer;
    acc.rows = first->rows;
    acc.cols = first->cols;
    acc.values.assign(first->values.size(), 0.0);
    for (const auto& b : bundles) {
        const auto* m = b.find_map(layer);
        if (!m || m->values.size() != acc.values.size())
            throw FormatError("layer_average: inconsistent bundle for layer '" + layer + "'");
        for (size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += m->values[i];
    }
    for (auto& v : acc.values) v /= static_cast<double>(bundles.size());
    return normalize_map(acc);
}

BundleResult extract_bundle(model::CistGcn<float>& m, const data::Sample& sample) {
    Tensor<float> feat =
        model::build_input_features<float>(sample.input, sample.t1, sample.joints);
    auto last = sample.input.begin() + (sample.t1 - 1) * sample.joints * 3;
    Tensor<float> last_pose = Tensor<float>::from_vector(
        {sample.joints, 3}, std::vector<float>(last, last + sample.joints * 3));
    auto res = m.forward(feat, last_pose, /*training=*/false);
    BundleResult out;
    out.prediction.assign(res.prediction.values().begin(), res.prediction.values().end());
    out.bundle = std::move(res.interp);
    return out;
}

std::vector<ImportanceRecord> importance_table(model::CistGcn<float>& m,
                                               const std::vector<data::Sample>& samples) {
    std::vector<ImportanceRecord> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        BundleResult r = extract_bundle(m, s);
        ImportanceRecord rec;
        rec.sample_id = s.id();
        rec.action = s.action;
        rec.vec = r.bundle.importance_concat();
        rec.mpjpe = training::mpjpe_value(r.prediction, s.target, s.t2, s.joints);
        out.push_back(std::move(rec));
    }
    return out;
}

CentroidReport centroid_analysis_vectors(const std::vector<std::string>& labels,
                                         const std::vector<std::vector<double>>& vecs) {
    if (labels.size() != vecs.size()) throw FormatError("centroid_analysis: size mismatch");
    CentroidReport rep;
    std::map<std::string, std::vector<size_t>> by_label;
    for (size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
    for (auto& [label, ids] : by_label) {
        if (ids.size() < 2) {
            rep.warnings.push_back("class '" + label + "' has fewer than 2 samples; excluded");
            continue;
        }
        CentroidReport::ClassStat st;
        st.label = label;
        st.count = static_cast<int64_t>(ids.size());
        st.centroid.assign(vecs[ids[0]].size(), 0.0);
        for (size_t i : ids)
            for (size_t d = 0; d < st.centroid.size(); ++d) st.centroid[d] += vecs[i][d];
        for (auto& v : st.centroid) v /= static_cast<double>(ids.size());
        double intra = 0;
        for (size_t i : ids) intra += euclidean(vecs[i], st.centroid);
        st.intra_mean = intra / static_cast<double>(ids.size());
        rep.classes.push_back(std::move(st));
    }
    if (rep.classes.size() >= 2) {
        double inter = 0;
        int64_t pairs = 0;
        for (size_t a = 0; a < rep.classes.size(); ++a)
            for (size_t b = a + 1; b < rep.classes.size(); ++b) {
                inter += euclidean(rep.classes[a].centroid, rep.classes[b].centroid);
                ++pairs;
            }
        inter /= static_cast<double>(pairs);
        double intra = 0;
        for (const auto& c : rep.classes) intra += c.intra_mean;
        intra /= static_cast<double>(rep.classes.size());
        rep.inter_centroid_mean = inter;
        double denom = std::max(inter, intra);
        rep.separation = denom > 0 ? (inter - intra) / denom : 0.0;
    }
    return rep;
}

CentroidReport centroid_analysis(const std::vector<ImportanceRecord>& records) {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> vecs;
    labels.reserve(records.size());
    vecs.reserve(records.size());
    for (const auto& r : records) {
        labels.push_back(r.action);
        vecs.push_back(r.vec);
    }
    return centroid_analysis_vectors(labels, vecs);
}

std::vector<std::array<double, 2>> pca_project(const std::vector<std::vector<double>>& vecs,
                                               uint64_t seed) {
    if (vecs.empty()) return {};
    size_t n = vecs.size(), dims = vecs[0].size();
    std::vector<std::vector<double>> x(vecs);
    std::vector<double> mean(dims, 0.0);
    for (const auto& v : x)
        for (size_t d = 0; d < dims; ++d) mean[d] += v[d];
    for (auto& v : mean) v /= static_cast<double>(n);
    for (auto& v : x)
        for (size_t d = 0; d < dims; ++d) v[d] -= mean[d];

    Rng rng(Rng::derive(seed, 0x706361ULL));
    auto power_direction = [&](const std::vector<std::vector<double>>& data) {
        std::vector<double> v(dims);
        for (auto& e : v) e = rng.normal();
        for (int it = 0; it < 300; ++it) {
            // v <- X^T (X v), normalized
            std::vector<double> u(n, 0.0);
            for (size_t i = 0; i < n; ++i)
                for (size_t d = 0; d < dims; ++d) u[i] += data[i][d] * v[d];
            std::vector<double> nv(dims, 0.0);
            for (size_t i = 0; i < n; ++i)
                for (size_t d = 0; d < dims; ++d) nv[d] += data[i][d] * u[i];
            double norm = 0;
            for (double e : nv) norm += e * e;
            norm = std::sqrt(norm);
            if (norm < 1e-300) return std::vector<double>(dims, 0.0);
            for (size_t d = 0; d < dims; ++d) v[d] = nv[d] / norm;
        }
        return v;
    };
    std::vector<double> v1 = power_direction(x);
    std::vector<std::vector<double>> x2(x);
    for (size_t i = 0; i < n; ++i) {
        double proj = 0;
        for (size_t d = 0; d < dims; ++d) proj += x[i][d] * v1[d];
        for (size_t d = 0; d < dims; ++d) x2[i][d] -= proj * v1[d];
    }
    std::vector<double> v2 = power_direction(x2);

    std::vector<std::array<double, 2>> coords(n);
    for (size_t i = 0; i < n; ++i) {
        double a = 0, b = 0;
        for (size_t d = 0; d < dims; ++d) {
            a += x[i][d] * v1[d];
            b += x[i][d] * v2[d];
        }
        coords[i] = {a, b};
    }
    return coords;
}

void export_bundle(const std::string& dir, const model::Interpretation& bundle) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir + "/manifest.tsv");
    if (!manifest) throw FormatError("cannot open manifest in '" + dir + "'");
    for (const auto& m : bundle.maps) {
        SaliencyMap sm = normalize_map(m);
        io::tnsr_write(dir + "/" + m.name + ".tnsr", {m.rows, m.cols}, sm.values);
        manifest << m.name << '\t' << m.rows << '\t' << m.cols << '\t' << sm.mean << '\t'
                 << sm.stddev << "\n";
    }
    if (!manifest) throw FormatError("write error on manifest in '" + dir + "'");
}

void write_importance_tsv(const std::string& path,
                          const std::vector<ImportanceRecord>& records) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    size_t dims = records.empty() ? 0 : records[0].vec.size();
    out << "sample_id\taction\tmpjpe";
    for (size_t d = 0; d < dims; ++d) out << "\tv" << d;
    out << "\n";
    for (const auto& r : records) {
        out << r.sample_id << '\t' << r.action << '\t' << r.mpjpe;
        for (double v : r.vec) out << '\t' << v;
        out << "\n";
    }
    if (!out) throw FormatError("write error on '" + path + "'");
}

void write_centroids_tsv(const std::string& path, const CentroidReport& report) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << "class\tcount\tintra_mean\n";
    for (const auto& c : report.classes)
        out << c.label << '\t' << c.count << '\t' << c.intra_mean << "\n";
    out << "#inter_centroid_mean\t"
        << (report.inter_centroid_mean ? std::to_string(*report.inter_centroid_mean) : "absent")
        << "\n";
    out << "#separation\t" << (report.separation ? std::to_string(*report.separation) : "absent")
        << "\n";
    for (const auto& w : report.warnings) out << "#warning\t" << w << "\n";
    if (!out) throw FormatError("write error on '" + path + "'");
}

void write_pca_tsv(const std::string& path, const std::vector<ImportanceRecord>& records,
                   const std::vector<std::array<double, 2>>& coords) {
    if (records.size() != coords.size()) throw FormatError("pca export: size mismatch");
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << "sample_id\taction\tmpjpe\tpc1\tpc2\n";
    for (size_t i = 0; i < records.size(); ++i)
        out << records[i].sample_id << '\t' << records[i].action << '\t' << records[i].mpjpe
            << '\t' << coords[i][0] << '\t' << coords[i][1] << "\n";
    if (!out) throw FormatError("write error on '" + path + "'");
}

}  // namespace cistgcn::interpret

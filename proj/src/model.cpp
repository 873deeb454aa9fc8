#include "hmoe/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace hmoe {

namespace {

constexpr double kDensityFloor = 1e-300;

double gaussian_pdf(double y, double mu, double nu) {
    const double z = y - mu;
    return std::exp(-0.5 * z * z / nu) / std::sqrt(2.0 * std::numbers::pi * nu);
}

}  // namespace

std::string to_string(GatingCombo combo) {
    switch (combo) {
        case GatingCombo::SS: return "SS";
        case GatingCombo::SL: return "SL";
        case GatingCombo::LL: return "LL";
    }
    throw InvalidInput("unknown combo");
}

GatingCombo combo_from_string(const std::string& s) {
    if (s == "SS") return GatingCombo::SS;
    if (s == "SL") return GatingCombo::SL;
    if (s == "LL") return GatingCombo::LL;
    throw InvalidInput("unknown gating combo: " + s);
}

bool first_level_is_laplace(GatingCombo combo) {
    return combo == GatingCombo::LL;
}

bool second_level_is_laplace(GatingCombo combo) {
    return combo != GatingCombo::SS;
}

int MixingMeasure::total_paths() const {
    int total = 0;
    for (const auto& g : groups) total += static_cast<int>(g.experts.size());
    return total;
}

void MixingMeasure::validate() const {
    if (groups.empty()) throw InvalidModel("mixing measure has no groups");
    if (dim < 1) throw InvalidModel("dim must be >= 1");
    auto finite = [](const Eigen::VectorXd& v) { return v.allFinite(); };
    for (const auto& g : groups) {
        if (g.a.size() != dim || !finite(g.a) || !std::isfinite(g.b))
            throw InvalidModel("bad first-level gate atom");
        if (g.experts.empty()) throw InvalidModel("group has no experts");
        for (const auto& e : g.experts) {
            if (e.omega.size() != dim || !finite(e.omega) ||
                !std::isfinite(e.beta))
                throw InvalidModel("bad second-level gate atom");
            if (e.expert.eta.size() != dim || !finite(e.expert.eta) ||
                !std::isfinite(e.expert.tau) || !std::isfinite(e.expert.nu))
                throw InvalidModel("bad expert atom");
            if (e.expert.nu <= 0.0) throw InvalidModel("expert variance must be > 0");
        }
    }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
    if (!v.allFinite()) throw InvalidInput("softmax: non-finite input");
    const double m = v.maxCoeff();
    Eigen::VectorXd e = (v.array() - m).exp();
    return e / e.sum();
}

static Eigen::VectorXd first_level_logits(const MixingMeasure& G,
                                          GatingCombo combo,
                                          const Eigen::VectorXd& x) {
    Eigen::VectorXd l(G.k1());
    for (int i1 = 0; i1 < G.k1(); ++i1) {
        const auto& g = G.groups[i1];
        l[i1] = first_level_is_laplace(combo) ? -(g.a - x).norm() + g.b
                                              : g.a.dot(x) + g.b;
    }
    return l;
}

static Eigen::VectorXd second_level_logits(const MixingMeasure& G,
                                           GatingCombo combo,
                                           const Eigen::VectorXd& x, int i1) {
    const auto& g = G.groups[i1];
    Eigen::VectorXd l(static_cast<int>(g.experts.size()));
    for (int i2 = 0; i2 < l.size(); ++i2) {
        const auto& e = g.experts[i2];
        l[i2] = second_level_is_laplace(combo) ? -(e.omega - x).norm() + e.beta
                                               : e.omega.dot(x) + e.beta;
    }
    return l;
}

Eigen::VectorXd gate_weights(const MixingMeasure& G, GatingCombo combo,
                             const Eigen::VectorXd& x, Level level,
                             int group_index) {
    if (x.size() != G.dim) throw InvalidInput("gate_weights: dimension mismatch");
    if (level == Level::Second) {
        if (group_index < 0 || group_index >= G.k1())
            throw InvalidInput("gate_weights: bad group index");
        return softmax(second_level_logits(G, combo, x, group_index));
    }
    return softmax(first_level_logits(G, combo, x));
}

double conditional_density(const MixingMeasure& G, GatingCombo combo,
                           const Eigen::VectorXd& x, double y) {
    if (x.size() != G.dim || !x.allFinite() || !std::isfinite(y))
        throw InvalidInput("conditional_density: bad input");
    const Eigen::VectorXd g1 = gate_weights(G, combo, x, Level::First);
    double p = 0.0;
    for (int i1 = 0; i1 < G.k1(); ++i1) {
        const Eigen::VectorXd g2 = gate_weights(G, combo, x, Level::Second, i1);
        for (int i2 = 0; i2 < g2.size(); ++i2) {
            const auto& e = G.groups[i1].experts[i2].expert;
            p += g1[i1] * g2[i2] * gaussian_pdf(y, e.eta.dot(x) + e.tau, e.nu);
        }
    }
    return p;
}

Dataset sample(const MixingMeasure& G, GatingCombo combo, int n, InputLaw law,
               std::uint64_t seed) {
    G.validate();
    if (n < 1) throw InvalidInput("sample: n must be >= 1");
    Dataset data;
    data.x.resize(n, G.dim);
    data.y.resize(n);
    data.seed = seed;
    data.truth = G;
    data.truth_combo = combo;
    Rng root(seed);
    for (int i = 0; i < n; ++i) {
        Rng rng = root.split(static_cast<std::uint64_t>(i));
        Eigen::VectorXd x(G.dim);
        for (int j = 0; j < G.dim; ++j) {
            if (law == InputLaw::UniformBox) {
                x[j] = rng.uniform(-1.0, 1.0);
            } else {
                double z = rng.normal();
                while (std::abs(z) > 1.0) z = rng.normal();
                x[j] = z;
            }
        }
        const int i1 = rng.categorical(gate_weights(G, combo, x, Level::First));
        const int i2 =
            rng.categorical(gate_weights(G, combo, x, Level::Second, i1));
        const auto& e = G.groups[i1].experts[i2].expert;
        data.x.row(i) = x.transpose();
        data.y[i] = e.eta.dot(x) + e.tau + std::sqrt(e.nu) * rng.normal();
    }
    return data;
}

double log_likelihood(const MixingMeasure& G, GatingCombo combo,
                      const Dataset& data) {
    G.validate();
    if (data.n() < 1) throw InvalidInput("log_likelihood: empty dataset");
    double total = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double p = conditional_density(G, combo, data.x.row(i), data.y[i]);
        total += std::log(std::max(p, kDensityFloor));
    }
    return total / data.n();
}

MixingMeasure normalize(const MixingMeasure& G, GatingCombo combo) {
    MixingMeasure out = G;
    const auto& last = out.groups.back();
    const Eigen::VectorXd a0 =
        first_level_is_laplace(combo) ? Eigen::VectorXd::Zero(out.dim).eval()
                                      : last.a;
    const double b0 = last.b;
    for (auto& g : out.groups) {
        g.a -= a0;
        g.b -= b0;
        const auto& last_e = g.experts.back();
        const Eigen::VectorXd w0 = second_level_is_laplace(combo)
                                       ? Eigen::VectorXd::Zero(out.dim).eval()
                                       : last_e.omega;
        const double beta0 = last_e.beta;
        for (auto& e : g.experts) {
            e.omega -= w0;
            e.beta -= beta0;
        }
    }
    return out;
}

// --- serialization ---

using nlohmann::json;

static json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

static Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i];
    return v;
}

static json measure_to_json_obj(const MixingMeasure& G, GatingCombo combo) {
    json j;
    j["combo"] = to_string(combo);
    j["dim"] = G.dim;
    j["groups"] = json::array();
    for (const auto& g : G.groups) {
        json jg;
        jg["a"] = vec_to_json(g.a);
        jg["b"] = g.b;
        jg["experts"] = json::array();
        for (const auto& e : g.experts) {
            jg["experts"].push_back({{"omega", vec_to_json(e.omega)},
                                     {"beta", e.beta},
                                     {"eta", vec_to_json(e.expert.eta)},
                                     {"tau", e.expert.tau},
                                     {"nu", e.expert.nu}});
        }
        j["groups"].push_back(std::move(jg));
    }
    return j;
}

static std::pair<MixingMeasure, GatingCombo> measure_from_json_obj(const json& j) {
    MixingMeasure G;
    G.dim = j.at("dim");
    for (const auto& jg : j.at("groups")) {
        Group g;
        g.a = vec_from_json(jg.at("a"));
        g.b = jg.at("b");
        for (const auto& je : jg.at("experts")) {
            SecondLevelAtom e;
            e.omega = vec_from_json(je.at("omega"));
            e.beta = je.at("beta");
            e.expert.eta = vec_from_json(je.at("eta"));
            e.expert.tau = je.at("tau");
            e.expert.nu = je.at("nu");
            g.experts.push_back(std::move(e));
        }
        G.groups.push_back(std::move(g));
    }
    G.validate();
    return {G, combo_from_string(j.at("combo"))};
}

std::string to_json(const MixingMeasure& G, GatingCombo combo) {
    return measure_to_json_obj(G, combo).dump(2);
}

std::pair<MixingMeasure, GatingCombo> measure_from_json(const std::string& text) {
    return measure_from_json_obj(json::parse(text));
}

void write_dataset_csv(const Dataset& data, const std::string& csv_path,
                       const std::string& sidecar_path) {
    std::ofstream out(csv_path);
    if (!out) throw InvalidInput("cannot open " + csv_path);
    for (int j = 0; j < data.dim(); ++j) out << "x_" << j << ",";
    out << "y\n";
    out.precision(17);
    for (int i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.dim(); ++j) out << data.x(i, j) << ",";
        out << data.y[i] << "\n";
    }
    json side;
    side["seed"] = data.seed;
    if (data.truth && data.truth_combo)
        side["truth"] = measure_to_json_obj(*data.truth, *data.truth_combo);
    std::ofstream sout(sidecar_path);
    sout << side.dump(2) << "\n";
}

Dataset read_dataset_csv(const std::string& csv_path,
                         const std::string& sidecar_path) {
    std::ifstream in(csv_path);
    if (!in) throw InvalidInput("cannot open " + csv_path);
    std::string header;
    std::getline(in, header);
    int d = 0;
    for (char c : header)
        if (c == ',') ++d;
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != d + 1)
            throw InvalidInput("csv row width mismatch in " + csv_path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput("empty dataset: " + csv_path);
    Dataset data;
    data.x.resize(static_cast<int>(rows.size()), d);
    data.y.resize(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) data.x(static_cast<int>(i), j) = rows[i][j];
        data.y[static_cast<int>(i)] = rows[i][d];
    }
    if (!sidecar_path.empty()) {
        std::ifstream sin(sidecar_path);
        if (sin) {
            json side = json::parse(sin);
            data.seed = side.value("seed", 0ULL);
            if (side.contains("truth")) {
                auto [truth, combo] = measure_from_json_obj(side["truth"]);
                data.truth = truth;
                data.truth_combo = combo;
            }
        }
    }
    return data;
}

}  // namespace hmoe

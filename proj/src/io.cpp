#include "aggflex/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aggflex/errors.hpp"

namespace aggflex {

using nlohmann::json;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const auto nr = static_cast<Eigen::Index>(rows.size());
    require(nr > 0, ErrorKind::Io, "empty matrix in file");
    const auto nc = static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd m(nr, nc);
    for (Eigen::Index r = 0; r < nr; ++r) {
        require(static_cast<Eigen::Index>(rows[static_cast<size_t>(r)].size()) == nc,
                ErrorKind::Io, "ragged matrix in file");
        for (Eigen::Index c = 0; c < nc; ++c) {
            m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
        }
    }
    return m;
}

json parse(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    require(!j.is_discarded(), ErrorKind::Io, "malformed JSON");
    return j;
}

} // namespace

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << content;
    require(out.good(), ErrorKind::Io, "short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string scenario_to_json(const ScenarioFile& scenario) {
    json j;
    j["delta_hours"] = scenario.delta_hours;
    j["T"] = scenario.periods;
    json evs = json::array();
    for (const EvSpec& e : scenario.evs) {
        evs.push_back({{"arrival", e.arrival},
                       {"departure", e.departure},
                       {"max_rate_kw", e.max_rate},
                       {"energy_kwh", e.energy}});
    }
    j["evs"] = evs;
    j["meta"] = {{"seed", scenario.seed}, {"generator_version", scenario.generator_version}};
    return j.dump(2) + "\n";
}

ScenarioFile scenario_from_json(const std::string& text) {
    const json j = parse(text);
    ScenarioFile s;
    try {
        s.delta_hours = j.at("delta_hours").get<double>();
        s.periods = j.at("T").get<int>();
        for (const json& e : j.at("evs")) {
            EvSpec spec;
            spec.arrival = e.at("arrival").get<int>();
            spec.departure = e.at("departure").get<int>();
            spec.max_rate = e.at("max_rate_kw").get<double>();
            spec.energy = e.at("energy_kwh").get<double>();
            s.evs.push_back(spec);
        }
        if (j.contains("meta")) {
            s.seed = j["meta"].value("seed", std::uint64_t{0});
            s.generator_version = j["meta"].value("generator_version", std::string{"1"});
        }
    } catch (const json::exception& e) {
        throw_error(ErrorKind::Io, std::string("scenario file: ") + e.what());
    }
    // every EV must pass spec validation on load
    const ChargingGrid grid(s.periods, s.delta_hours, Representation::PowerSpace);
    for (const EvSpec& spec : s.evs) {
        validate_spec(spec, grid);
    }
    return s;
}

void save_scenario(const ScenarioFile& scenario, const std::string& path) {
    write_text_file(path, scenario_to_json(scenario));
}

ScenarioFile load_scenario(const std::string& path) {
    return scenario_from_json(read_text_file(path));
}

std::string model_to_json(const ModelFile& model, bool with_certificates) {
    const ApproximationResult& res = model.result;
    const MultiBatteryModel& mb = res.model;
    json j;
    j["grid"] = {{"T", model.periods}, {"delta_hours", model.delta_hours}};
    j["representation"] = representation_name(model.representation);
    j["norm"] = norm_name(model.norm);
    j["variant"] = variant_name(model.variant);
    json clustering;
    clustering["assignments"] = mb.assignments;
    clustering["sizes"] = mb.cluster_sizes;
    json b_k = json::array();
    for (const HPolytope& base : mb.bases) {
        b_k.push_back(vector_to_json(base.b));
    }
    clustering["b_k"] = b_k;
    j["clustering"] = clustering;
    json mu = json::array();
    for (const Eigen::VectorXd& m : mb.mu) {
        mu.push_back(vector_to_json(m));
    }
    j["mu_k"] = mu;
    j["sigma"] = vector_to_json(mb.sigma);
    json gamma = json::array();
    for (const Eigen::VectorXd& g : res.map.gamma) {
        gamma.push_back(vector_to_json(g));
    }
    json Gamma = json::array();
    for (const auto& per_k : res.map.Gamma) {
        json per_k_json = json::array();
        for (const Eigen::MatrixXd& m : per_k) {
            per_k_json.push_back(matrix_to_json(m));
        }
        Gamma.push_back(per_k_json);
    }
    j["disaggregation"] = {{"gamma", gamma}, {"Gamma", Gamma}};
    if (with_certificates) {
        json Lambda = json::array();
        for (const auto& per_k : res.map.Lambda) {
            json per_k_json = json::array();
            for (const Eigen::MatrixXd& m : per_k) {
                per_k_json.push_back(matrix_to_json(m));
            }
            Lambda.push_back(per_k_json);
        }
        j["disaggregation"]["Lambda"] = Lambda;
    }
    j["solver"] = {{"status", status_name(res.status)},
                   {"surrogate_objective", res.surrogate_objective},
                   {"solve_ms", res.solve_ms}};
    j["meta"] = {{"seed", model.seed}};
    return j.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
    const json j = parse(text);
    ModelFile model;
    try {
        model.periods = j.at("grid").at("T").get<int>();
        model.delta_hours = j.at("grid").at("delta_hours").get<double>();
        model.representation = representation_from_name(j.at("representation").get<std::string>());
        model.norm = norm_from_name(j.at("norm").get<std::string>());
        model.variant = variant_from_name(j.at("variant").get<std::string>());
        model.seed = j.contains("meta") ? j["meta"].value("seed", std::uint64_t{0}) : 0;

        ApproximationResult& res = model.result;
        res.norm = model.norm;
        res.variant = model.variant;
        res.representation = model.representation;
        MultiBatteryModel& mb = res.model;
        mb.T = model.periods;
        mb.delta_hours = model.delta_hours;
        mb.assignments = j.at("clustering").at("assignments").get<std::vector<int>>();
        mb.cluster_sizes = j.at("clustering").at("sizes").get<std::vector<int>>();
        const ChargingGrid power(model.periods, model.delta_hours, Representation::PowerSpace);
        for (const json& b : j.at("clustering").at("b_k")) {
            mb.bases.emplace_back(power.constraint_matrix(), vector_from_json(b));
        }
        for (const json& m : j.at("mu_k")) {
            mb.mu.push_back(vector_from_json(m));
        }
        mb.sigma = vector_from_json(j.at("sigma"));
        for (const json& g : j.at("disaggregation").at("gamma")) {
            res.map.gamma.push_back(vector_from_json(g));
        }
        for (const json& per_k : j.at("disaggregation").at("Gamma")) {
            std::vector<Eigen::MatrixXd> row;
            for (const json& m : per_k) {
                row.push_back(matrix_from_json(m));
            }
            res.map.Gamma.push_back(std::move(row));
        }
        if (j.at("disaggregation").contains("Lambda")) {
            model.has_certificates = true;
            for (const json& per_k : j["disaggregation"]["Lambda"]) {
                std::vector<Eigen::MatrixXd> row;
                for (const json& m : per_k) {
                    row.push_back(matrix_from_json(m));
                }
                res.map.Lambda.push_back(std::move(row));
            }
        } else {
            res.map.Lambda.assign(
                static_cast<size_t>(mb.k()),
                std::vector<Eigen::MatrixXd>(res.map.gamma.size(),
                                             Eigen::MatrixXd::Zero(4 * mb.T, 4 * mb.T)));
        }
        const std::string status = j.at("solver").at("status").get<std::string>();
        res.status = status == "optimal" ? SolveStatus::Optimal : SolveStatus::NumericFailure;
        res.surrogate_objective = j.at("solver").value("surrogate_objective", 0.0);
    } catch (const json::exception& e) {
        throw_error(ErrorKind::Io, std::string("model file: ") + e.what());
    }

    // structural invariants checkable without the scenario
    const MultiBatteryModel& mb = model.result.model;
    const int K = mb.k();
    const auto N = static_cast<int>(model.result.map.gamma.size());
    require(static_cast<int>(mb.mu.size()) == K && mb.sigma.size() == K &&
                static_cast<int>(mb.cluster_sizes.size()) == K,
            ErrorKind::Io, "model file: inconsistent K");
    require(static_cast<int>(mb.assignments.size()) == N, ErrorKind::Io,
            "model file: assignments do not cover the EVs");
    require(mb.sigma.minCoeff() >= -1e-9, ErrorKind::Io, "model file: negative sigma");
    Eigen::VectorXd gsum = Eigen::VectorXd::Zero(mb.T);
    for (const Eigen::VectorXd& g : model.result.map.gamma) {
        gsum += g;
    }
    const Eigen::VectorXd mu = mb.mu_total();
    require((gsum - mu).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + mu.cwiseAbs().maxCoeff()),
            ErrorKind::Io, "model file: sum of gamma_i differs from mu");
    for (int k = 0; k < K; ++k) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(mb.T, mb.T);
        for (int i = 0; i < N; ++i) {
            s += model.result.map.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)];
        }
        s -= mb.sigma(k) * Eigen::MatrixXd::Identity(mb.T, mb.T);
        require(s.cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + std::abs(mb.sigma(k))), ErrorKind::Io,
                "model file: sum of Gamma_{k,i} differs from sigma_k I");
    }
    return model;
}

void save_model(const ModelFile& model, const std::string& path, bool with_certificates) {
    write_text_file(path, model_to_json(model, with_certificates));
}

ModelFile load_model(const std::string& path) {
    return model_from_json(read_text_file(path));
}

std::string results_to_csv(const std::vector<TrialResult>& rows, bool with_timings) {
    std::ostringstream out;
    out << "trial,seed,K,variant,norm,J_star_kw,J_K_kw,gap_percent,surrogate_objective,"
           "cluster_ms,solve_ms,shave_ms,status\n";
    for (const TrialResult& r : rows) {
        out << r.trial << ',' << r.seed << ',' << r.K << ',' << variant_name(r.variant) << ','
            << norm_name(r.norm) << ',' << format_double(r.j_star_kw) << ','
            << format_double(r.j_k_kw) << ',' << format_double(r.gap_percent) << ','
            << format_double(r.surrogate_objective) << ','
            << format_double(with_timings ? r.cluster_ms : 0.0) << ','
            << format_double(with_timings ? r.solve_ms : 0.0) << ','
            << format_double(with_timings ? r.shave_ms : 0.0) << ',' << r.status << '\n';
    }
    return out.str();
}

void save_results_csv(const std::vector<TrialResult>& rows, const std::string& path,
                      bool with_timings) {
    write_text_file(path, results_to_csv(rows, with_timings));
}

std::string summary_to_csv(const std::vector<GapSummary>& summary) {
    std::ostringstream out;
    out << "K,min,q1,median,q3,max,count\n";
    for (const GapSummary& s : summary) {
        out << s.K << ',' << format_double(s.min) << ',' << format_double(s.q1) << ','
            << format_double(s.median) << ',' << format_double(s.q3) << ','
            << format_double(s.max) << ',' << s.count << '\n';
    }
    return out.str();
}

void save_summary_csv(const std::vector<GapSummary>& summary, const std::string& path) {
    write_text_file(path, summary_to_csv(summary));
}

std::vector<TrialResult> load_results_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io, "empty results file");
    std::vector<TrialResult> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) {
            fields.push_back(field);
        }
        require(fields.size() == 13, ErrorKind::Io, "results row with wrong column count");
        TrialResult r;
        r.trial = std::stoi(fields[0]);
        r.seed = std::stoull(fields[1]);
        r.K = std::stoi(fields[2]);
        r.variant = variant_from_name(fields[3]);
        r.norm = norm_from_name(fields[4]);
        r.j_star_kw = std::stod(fields[5]);
        r.j_k_kw = std::stod(fields[6]);
        r.gap_percent = std::stod(fields[7]);
        r.surrogate_objective = std::stod(fields[8]);
        r.cluster_ms = std::stod(fields[9]);
        r.solve_ms = std::stod(fields[10]);
        r.shave_ms = std::stod(fields[11]);
        r.status = fields[12];
        rows.push_back(r);
    }
    return rows;
}

namespace {

std::string svg_header(int width, int height) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out.str();
}

const char* kSeriesColors[] = {"#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
                               "#b279a2", "#ff9da6", "#9d755d", "#bab0ac", "#6b6ecf"};

} // namespace

std::string gap_boxplot_svg(const std::vector<GapSummary>& summary) {
    const int width = 560, height = 420;
    const double left = 70, right = 30, top = 40, bottom = 60;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double lo = 0.0, hi = 1.0;
    for (const GapSummary& s : summary) {
        hi = std::max(hi, s.max);
        lo = std::min(lo, s.min);
    }
    const double span = hi - lo < 1e-12 ? 1.0 : hi - lo;
    auto ypix = [&](double v) { return top + plot_h * (1.0 - (v - lo) / span); };

    std::ostringstream out;
    out << svg_header(width, height);
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
           "font-family=\"sans-serif\">Suboptimality gap vs number of base sets</text>\n";
    // axes
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
    for (int g = 0; g <= 4; ++g) {
        const double v = lo + span * g / 4.0;
        out << "<text x=\"" << left - 8 << "\" y=\"" << ypix(v) + 4
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
            << format_double(std::round(v * 100.0) / 100.0) << "</text>\n";
        out << "<line x1=\"" << left - 4 << "\" y1=\"" << ypix(v) << "\" x2=\"" << left
            << "\" y2=\"" << ypix(v) << "\" stroke=\"black\"/>\n";
    }
    out << "<text x=\"16\" y=\"" << top + plot_h / 2
        << "\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
        << top + plot_h / 2 << ")\" text-anchor=\"middle\">gap (%)</text>\n";

    const double slot = plot_w / std::max<size_t>(1, summary.size());
    const double box_w = slot * 0.4;
    for (size_t i = 0; i < summary.size(); ++i) {
        const GapSummary& s = summary[i];
        const double cx = left + slot * (i + 0.5);
        // whiskers
        out << "<line x1=\"" << cx << "\" y1=\"" << ypix(s.min) << "\" x2=\"" << cx << "\" y2=\""
            << ypix(s.q1) << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << cx << "\" y1=\"" << ypix(s.q3) << "\" x2=\"" << cx << "\" y2=\""
            << ypix(s.max) << "\" stroke=\"black\"/>\n";
        for (double v : {s.min, s.max}) {
            out << "<line x1=\"" << cx - box_w / 4 << "\" y1=\"" << ypix(v) << "\" x2=\""
                << cx + box_w / 4 << "\" y2=\"" << ypix(v) << "\" stroke=\"black\"/>\n";
        }
        // box and median
        out << "<rect x=\"" << cx - box_w / 2 << "\" y=\"" << ypix(s.q3) << "\" width=\"" << box_w
            << "\" height=\"" << ypix(s.q1) - ypix(s.q3)
            << "\" fill=\"#4c78a8\" fill-opacity=\"0.5\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << cx - box_w / 2 << "\" y1=\"" << ypix(s.median) << "\" x2=\""
            << cx + box_w / 2 << "\" y2=\"" << ypix(s.median)
            << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << cx << "\" y=\"" << top + plot_h + 20
            << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">K=" << s.K
            << "</text>\n";
    }
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">number of base "
           "sets</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string stacked_profiles_svg(const std::vector<Eigen::VectorXd>& series,
                                 const std::vector<std::string>& labels, double delta_hours,
                                 const std::string& title) {
    require(!series.empty(), ErrorKind::Domain, "nothing to plot");
    const auto T = series.front().size();
    for (const Eigen::VectorXd& s : series) {
        require(s.size() == T, ErrorKind::DimensionMismatch, "profiles of different lengths");
    }
    const int width = 640, height = 420;
    const double left = 60, right = 150, top = 40, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    Eigen::VectorXd total = Eigen::VectorXd::Zero(T);
    for (const Eigen::VectorXd& s : series) {
        total += s;
    }
    double hi = std::max(1e-9, total.maxCoeff());
    double lo = std::min(0.0, total.minCoeff());
    const double span = hi - lo;
    auto xpix = [&](double t) { return left + plot_w * t / static_cast<double>(T); };
    auto ypix = [&](double v) { return top + plot_h * (1.0 - (v - lo) / span); };

    std::ostringstream out;
    out << svg_header(width, height);
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
           "font-family=\"sans-serif\">" << title << "</text>\n";

    Eigen::VectorXd floor_acc = Eigen::VectorXd::Zero(T);
    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = kSeriesColors[s % 10];
        std::ostringstream path;
        // staircase top edge left to right, then bottom edge back
        for (Eigen::Index t = 0; t < T; ++t) {
            const double y = ypix(floor_acc(t) + series[s](t));
            path << (t == 0 ? "M" : "L") << xpix(t) << ' ' << y << " L" << xpix(t + 1) << ' ' << y
                 << ' ';
        }
        for (Eigen::Index t = T - 1; t >= 0; --t) {
            const double y = ypix(floor_acc(t));
            path << "L" << xpix(t + 1) << ' ' << y << " L" << xpix(t) << ' ' << y << ' ';
        }
        path << 'Z';
        out << "<path d=\"" << path.str() << "\" fill=\"" << color
            << "\" fill-opacity=\"0.7\" stroke=\"none\"/>\n";
        floor_acc += series[s];
        if (s < labels.size()) {
            out << "<rect x=\"" << width - right + 10 << "\" y=\"" << top + 18.0 * s
                << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
            out << "<text x=\"" << width - right + 28 << "\" y=\"" << top + 18.0 * s + 10
                << "\" font-size=\"11\" font-family=\"sans-serif\">" << labels[s] << "</text>\n";
        }
    }
    // total on top
    std::ostringstream tpath;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double y = ypix(total(t));
        tpath << (t == 0 ? "M" : "L") << xpix(t) << ' ' << y << " L" << xpix(t + 1) << ' ' << y
              << ' ';
    }
    out << "<path d=\"" << tpath.str() << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";

    // axes
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << ypix(0.0) << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << ypix(0.0) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 14
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">period ("
        << format_double(delta_hours) << " h each)</text>\n";
    out << "<text x=\"16\" y=\"" << top + plot_h / 2
        << "\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
        << top + plot_h / 2 << ")\" text-anchor=\"middle\">power (kW)</text>\n";
    out << "</svg>\n";
    return out.str();
}

} // namespace aggflex

#include "semrob/io.hpp"

#include "semrob/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace semrob {

using nlohmann::json;

std::string format_real(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::remove(tmp.c_str());
            throw IoError("failed writing '" + tmp + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("failed to move '" + tmp + "' to '" + path + "': " + std::strerror(errno));
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("failed reading '" + path + "'");
    return buffer.str();
}

namespace {

json parse_json(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError(std::string("malformed JSON in ") + what);
    return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("bad numeric field '") + s + "' in " + what);
    }
}

long long parse_int(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("bad integer field '") + s + "' in " + what);
    }
}

bool parse_bool(const std::string& s, const char* what) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw IoError(std::string("bad boolean field '") + s + "' in " + what);
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream stream(text);
    while (std::getline(stream, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

} // namespace

std::string population_to_json(const SyntheticPopulation& population) {
    json j;
    j["latent_dim"] = population.latent_dim;
    j["seed"] = population.seed;
    j["codes"] = population.codes;
    return j.dump();
}

SyntheticPopulation population_from_json(const std::string& text) {
    const json j = parse_json(text, "population file");
    SyntheticPopulation pop;
    try {
        pop.latent_dim = j.at("latent_dim").get<std::size_t>();
        pop.seed = j.at("seed").get<std::uint64_t>();
        pop.codes = j.at("codes").get<std::vector<LatentCode>>();
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid population file: ") + e.what());
    }
    if (pop.codes.size() < 2) throw IoError("population file holds fewer than 2 identities");
    for (const auto& code : pop.codes) {
        if (code.size() != pop.latent_dim) {
            throw IoError("population code length does not match latent_dim");
        }
        for (double x : code) {
            if (!std::isfinite(x)) throw IoError("population contains non-finite values");
        }
    }
    return pop;
}

void save_population(const SyntheticPopulation& population, const std::string& path) {
    write_file_atomic(path, population_to_json(population) + "\n");
}

SyntheticPopulation load_population(const std::string& path) {
    return population_from_json(read_file(path));
}

std::string basis_to_json(const SemanticBasis& basis) {
    json j;
    j["latent_dim"] = basis.latent_dim();
    j["attributes"] = basis.attribute_names();
    json rows = json::array();
    for (std::size_t i = 0; i < basis.num_directions(); ++i) {
        const auto r = basis.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["directions"] = rows;
    return j.dump();
}

SemanticBasis basis_from_json(const std::string& text, double* max_renormalization) {
    const json j = parse_json(text, "basis file");
    std::size_t latent_dim = 0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    try {
        latent_dim = j.at("latent_dim").get<std::size_t>();
        names = j.at("attributes").get<std::vector<std::string>>();
        rows = j.at("directions").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid basis file: ") + e.what());
    }
    if (rows.size() != names.size()) throw IoError("basis file: one direction per attribute required");

    double max_adjust = 0.0;
    std::vector<double> flat;
    flat.reserve(rows.size() * latent_dim);
    for (auto& row : rows) {
        if (row.size() != latent_dim) throw IoError("basis file: direction length mismatch");
        double sq = 0.0;
        for (double x : row) {
            if (!std::isfinite(x)) throw IoError("basis file contains non-finite values");
            sq += x * x;
        }
        if (sq <= 0.0) throw IoError("basis file contains a zero direction");
        const double norm = std::sqrt(sq);
        max_adjust = std::max(max_adjust, std::fabs(norm - 1.0));
        for (double x : row) flat.push_back(x / norm);
    }
    if (max_renormalization != nullptr) *max_renormalization = max_adjust;
    return SemanticBasis::create(std::move(flat), std::move(names), latent_dim);
}

void save_basis(const SemanticBasis& basis, const std::string& path) {
    write_file_atomic(path, basis_to_json(basis) + "\n");
}

SemanticBasis load_basis(const std::string& path, double* max_renormalization) {
    return basis_from_json(read_file(path), max_renormalization);
}

std::string attack_results_to_csv(const std::vector<AttackOutcome>& outcomes,
                                  const std::string& method,
                                  std::size_t num_attributes) {
    std::string out = "identity_id,method,success,clean_correct,energy,predicted_class,restart_index";
    for (std::size_t i = 0; i < num_attributes; ++i) {
        out += ",delta_" + std::to_string(i);
    }
    out += "\n";
    for (const AttackOutcome& o : outcomes) {
        out += std::to_string(o.identity_id);
        out += ',';
        out += method;
        out += ',';
        out += o.success ? '1' : '0';
        out += ',';
        out += o.clean_correct ? '1' : '0';
        out += ',';
        out += format_real(o.energy);
        out += ',';
        out += std::to_string(o.predicted_class);
        out += ',';
        out += std::to_string(o.restart_index);
        for (std::size_t i = 0; i < num_attributes; ++i) {
            out += ',';
            out += format_real(i < o.delta.size() ? o.delta[i] : 0.0);
        }
        out += '\n';
    }
    return out;
}

std::vector<AttackRecord> attack_records_from_csv(const std::string& text) {
    const std::vector<std::string> lines = csv_lines(text);
    if (lines.empty()) throw IoError("attack results CSV is empty");
    const std::vector<std::string> header = split_csv_line(lines.front());
    constexpr std::size_t kFixed = 7;
    if (header.size() < kFixed || header[0] != "identity_id" || header[4] != "energy") {
        throw IoError("attack results CSV header does not match the expected schema");
    }
    const std::size_t n_attrs = header.size() - kFixed;

    std::vector<AttackRecord> records;
    records.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::vector<std::string> f = split_csv_line(lines[li]);
        if (f.size() != header.size()) throw IoError("attack results CSV row width mismatch");
        AttackRecord r;
        r.identity_id = parse_int(f[0], "attack CSV");
        r.method = f[1];
        r.success = parse_bool(f[2], "attack CSV");
        r.clean_correct = parse_bool(f[3], "attack CSV");
        r.energy = parse_double(f[4], "attack CSV");
        r.predicted_class = static_cast<std::size_t>(parse_int(f[5], "attack CSV"));
        r.restart_index = static_cast<int>(parse_int(f[6], "attack CSV"));
        r.delta.reserve(n_attrs);
        for (std::size_t i = 0; i < n_attrs; ++i) {
            r.delta.push_back(parse_double(f[kFixed + i], "attack CSV"));
        }
        records.push_back(std::move(r));
    }
    return records;
}

namespace {
const char* mode_name(SmoothingMode mode) {
    return mode == SmoothingMode::isotropic ? "isotropic" : "anisotropic";
}
} // namespace

std::string cert_results_to_csv(const std::vector<CertResult>& results,
                                SmoothingMode mode,
                                double sigma) {
    std::vector<CertRecord> records;
    records.reserve(results.size());
    for (const CertResult& r : results) {
        CertRecord rec;
        rec.identity_id = r.identity_id;
        rec.mode = mode_name(mode);
        rec.sigma = sigma;
        rec.predicted_class = r.predicted_class;
        rec.correct = r.correct;
        rec.p_a_lower = r.p_a_lower;
        rec.mahalanobis_radius = r.mahalanobis_radius;
        rec.radius = r.l2_or_proxy_radius;
        rec.abstain = r.abstain;
        records.push_back(std::move(rec));
    }
    return cert_records_to_csv(records);
}

std::string cert_records_to_csv(const std::vector<CertRecord>& records) {
    std::string out =
        "identity_id,mode,sigma,c_A,correct,p_a_lower,mahalanobis_radius,radius,abstain\n";
    for (const CertRecord& r : records) {
        out += std::to_string(r.identity_id);
        out += ',';
        out += r.mode;
        out += ',';
        out += format_real(r.sigma);
        out += ',';
        out += std::to_string(r.predicted_class);
        out += ',';
        out += r.correct ? '1' : '0';
        out += ',';
        out += format_real(r.p_a_lower);
        out += ',';
        out += format_real(r.mahalanobis_radius);
        out += ',';
        out += format_real(r.radius);
        out += ',';
        out += r.abstain ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::vector<CertRecord> cert_records_from_csv(const std::string& text) {
    const std::vector<std::string> lines = csv_lines(text);
    if (lines.empty()) throw IoError("certification CSV is empty");
    const std::vector<std::string> header = split_csv_line(lines.front());
    if (header.size() != 9 || header[0] != "identity_id" || header[8] != "abstain") {
        throw IoError("certification CSV header does not match the expected schema");
    }
    std::vector<CertRecord> records;
    records.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::vector<std::string> f = split_csv_line(lines[li]);
        if (f.size() != 9) throw IoError("certification CSV row width mismatch");
        CertRecord r;
        r.identity_id = parse_int(f[0], "cert CSV");
        r.mode = f[1];
        r.sigma = parse_double(f[2], "cert CSV");
        r.predicted_class = static_cast<std::size_t>(parse_int(f[3], "cert CSV"));
        r.correct = parse_bool(f[4], "cert CSV");
        r.p_a_lower = parse_double(f[5], "cert CSV");
        r.mahalanobis_radius = parse_double(f[6], "cert CSV");
        r.radius = parse_double(f[7], "cert CSV");
        r.abstain = parse_bool(f[8], "cert CSV");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<CertRecord> envelope_merge(const std::vector<std::vector<CertRecord>>& inputs) {
    if (inputs.empty()) throw ConfigError("envelope merge requires at least one input");
    std::map<std::int64_t, CertRecord> best;
    for (const auto& records : inputs) {
        for (const CertRecord& r : records) {
            auto it = best.find(r.identity_id);
            if (it == best.end() || r.radius > it->second.radius) {
                best[r.identity_id] = r;
            }
        }
    }
    std::vector<CertRecord> merged;
    merged.reserve(best.size());
    for (auto& [id, rec] : best) merged.push_back(std::move(rec));
    return merged;
}

std::string ranking_to_json(const RankingResult& result) {
    json j;
    j["order"] = result.ordered_attributes;
    j["adjacent_p"] = result.adjacent_p_values;
    j["significant"] = result.adjacent_significant;
    j["friedman_p"] = result.round_friedman_p;
    j["n"] = result.n_samples;
    j["alpha"] = result.alpha;
    return j.dump();
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "axis_value,robust_accuracy,n_attacked,n_population\n";
    for (const SweepRow& r : rows) {
        out += format_real(r.axis_value);
        out += ',';
        out += format_real(r.robust_accuracy);
        out += ',';
        out += std::to_string(r.n_attacked);
        out += ',';
        out += std::to_string(r.n_population);
        out += '\n';
    }
    return out;
}

std::string curve_to_csv(const std::vector<std::pair<double, double>>& curve) {
    std::string out = "radius,certified_accuracy\n";
    for (const auto& [radius, fraction] : curve) {
        out += format_real(radius);
        out += ',';
        out += format_real(fraction);
        out += '\n';
    }
    return out;
}

} // namespace semrob

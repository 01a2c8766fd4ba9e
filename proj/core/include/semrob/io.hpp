#pragma once

#include "semrob/attacks.hpp"
#include "semrob/certify.hpp"
#include "semrob/oracle.hpp"
#include "semrob/ranking.hpp"

#include <string>
#include <vector>

namespace semrob {

// Shortest exact decimal form would not be stable across printf flavors, so
// all CSV reals are printed at 17 significant digits.
std::string format_real(double value);

// Writes via a temporary file in the same directory plus rename, so failed
// commands never leave partial outputs behind.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Population JSON: {"latent_dim": int, "seed": int, "codes": [[...], ...]}.
std::string population_to_json(const SyntheticPopulation& population);
SyntheticPopulation population_from_json(const std::string& text);
void save_population(const SyntheticPopulation& population, const std::string& path);
SyntheticPopulation load_population(const std::string& path);

// Basis JSON: {"latent_dim": int, "attributes": [...], "directions": [[...]]}.
// Loading renormalizes rows; *max_renormalization reports the largest
// adjustment so callers can warn when it exceeds 1e-6.
std::string basis_to_json(const SemanticBasis& basis);
SemanticBasis basis_from_json(const std::string& text, double* max_renormalization = nullptr);
void save_basis(const SemanticBasis& basis, const std::string& path);
SemanticBasis load_basis(const std::string& path, double* max_renormalization = nullptr);

// Attack results CSV, one row per identity:
// identity_id,method,success,clean_correct,energy,predicted_class,restart_index,delta_0,...
std::string attack_results_to_csv(const std::vector<AttackOutcome>& outcomes,
                                  const std::string& method,
                                  std::size_t num_attributes);
struct AttackRecord {
    std::int64_t identity_id = -1;
    std::string method;
    bool success = false;
    bool clean_correct = false;
    double energy = 0.0;
    std::size_t predicted_class = 0;
    int restart_index = -1;
    std::vector<double> delta;
};
std::vector<AttackRecord> attack_records_from_csv(const std::string& text);

// Certification CSV:
// identity_id,mode,sigma,c_A,correct,p_a_lower,mahalanobis_radius,radius,abstain
std::string cert_results_to_csv(const std::vector<CertResult>& results,
                                SmoothingMode mode,
                                double sigma);
struct CertRecord {
    std::int64_t identity_id = -1;
    std::string mode;
    double sigma = 0.0;
    std::size_t predicted_class = 0;
    bool correct = false;
    double p_a_lower = 0.0;
    double mahalanobis_radius = 0.0;
    double radius = 0.0;
    bool abstain = true;
};
std::vector<CertRecord> cert_records_from_csv(const std::string& text);

// Best certificate per identity across several certification CSVs (max radius
// wins; earlier inputs win ties). Rows ordered by identity id.
std::vector<CertRecord> envelope_merge(const std::vector<std::vector<CertRecord>>& inputs);
std::string cert_records_to_csv(const std::vector<CertRecord>& records);

// Ranking report JSON.
std::string ranking_to_json(const RankingResult& result);

// Sweep curve CSV: axis_value,robust_accuracy,n_attacked,n_population.
struct SweepRow {
    double axis_value = 0.0;
    double robust_accuracy = 0.0;
    std::size_t n_attacked = 0;
    std::size_t n_population = 0;
};
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// Certified-accuracy curve CSV: radius,certified_accuracy.
std::string curve_to_csv(const std::vector<std::pair<double, double>>& curve);

} // namespace semrob

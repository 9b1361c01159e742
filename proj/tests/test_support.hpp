#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rexrank/matrix.hpp"
#include "rexrank/rng.hpp"

namespace testsupport {

using rexrank::Matrix;

// Textbook triple-loop product.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
            c.at(i, j) = acc;
        }
    return c;
}

// Eigenvalues of a symmetric matrix by classic two-sided Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(Matrix a) {
    const int n = a.rows;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-26) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a.at(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<double>());
    return eig;
}

// Singular values through the Gram-matrix eigenvalue route (the smaller
// side keeps the eigenproblem cheap).
inline std::vector<double> gram_singular_values(const Matrix& m) {
    const Matrix& a = m;
    const bool wide = a.cols > a.rows;
    const Matrix at = a.transposed();
    const Matrix gram = wide ? naive_matmul(a, at) : naive_matmul(at, a);
    std::vector<double> eig = symmetric_eigenvalues(gram);
    for (double& x : eig) x = std::sqrt(std::max(0.0, x));
    return eig;
}

// Orthonormal n x n factor via Gram-Schmidt on a Gaussian draw.
inline Matrix random_orthogonal(int n, rexrank::Rng& rng) {
    Matrix q = Matrix::gaussian(n, n, rng);
    for (int i = 0; i < n; ++i) {
        double* qi = q.row_ptr(i);
        for (int j = 0; j < i; ++j) {
            const double* qj = q.row_ptr(j);
            double dot = 0.0;
            for (int k = 0; k < n; ++k) dot += qi[k] * qj[k];
            for (int k = 0; k < n; ++k) qi[k] -= dot * qj[k];
        }
        double norm = 0.0;
        for (int k = 0; k < n; ++k) norm += qi[k] * qi[k];
        norm = std::sqrt(norm);
        for (int k = 0; k < n; ++k) qi[k] /= norm;
    }
    return q;  // rows orthonormal
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Background echo scorer implementing the external-fitness protocol:
// waits for candidates.json, scores each candidate with `score_fn`, and
// writes scores.json via write-then-rename.
class EchoScorer {
public:
    EchoScorer(std::filesystem::path exchange_dir,
               std::function<double(const std::vector<int>& channels, long long params,
                                    long long macs)>
                   score_fn)
        : thread_([dir = std::move(exchange_dir), fn = std::move(score_fn)] {
              namespace fs = std::filesystem;
              const fs::path in_path = dir / "candidates.json";
              for (int i = 0; i < 4000 && !fs::exists(in_path); ++i)
                  std::this_thread::sleep_for(std::chrono::milliseconds(5));
              std::ifstream in(in_path);
              nlohmann::json request = nlohmann::json::parse(in);
              nlohmann::ordered_json reply;
              reply["run_id"] = request.at("run_id");
              reply["scores"] = nlohmann::ordered_json::array();
              for (const auto& cand : request.at("candidates")) {
                  const std::vector<int> channels = cand.at("channels").get<std::vector<int>>();
                  const double score = fn(channels, cand.at("params").get<long long>(),
                                          cand.at("macs").get<long long>());
                  reply["scores"].push_back({{"id", cand.at("id").get<int>()}, {"score", score}});
              }
              const fs::path tmp = dir / "scores.json.tmp";
              {
                  std::ofstream out(tmp, std::ios::binary);
                  out << reply.dump(2) << "\n";
              }
              fs::rename(tmp, dir / "scores.json");
          }) {}

    ~EchoScorer() {
        if (thread_.joinable()) thread_.join();
    }

private:
    std::thread thread_;
};

// Minimal JSON-Schema subset validator: type / required / properties /
// items / enum / oneOf. Returns an empty string when valid, else the first
// violation found.
inline std::string validate_against_schema(const nlohmann::json& value,
                                           const nlohmann::json& schema,
                                           const std::string& where = "$") {
    if (schema.contains("oneOf")) {
        for (const auto& option : schema.at("oneOf"))
            if (validate_against_schema(value, option, where).empty()) return "";
        return where + ": matches no oneOf alternative";
    }
    if (schema.contains("type")) {
        const std::string type = schema.at("type").get<std::string>();
        const bool ok = (type == "object" && value.is_object()) ||
                        (type == "array" && value.is_array()) ||
                        (type == "string" && value.is_string()) ||
                        (type == "integer" && value.is_number_integer()) ||
                        (type == "number" && value.is_number()) ||
                        (type == "boolean" && value.is_boolean()) ||
                        (type == "null" && value.is_null());
        if (!ok) return where + ": expected type " + type;
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& allowed : schema.at("enum")) found = found || allowed == value;
        if (!found) return where + ": value not in enum";
    }
    if (value.is_object() && schema.contains("required"))
        for (const auto& name : schema.at("required"))
            if (!value.contains(name.get<std::string>()))
                return where + ": missing required field " + name.get<std::string>();
    if (value.is_object() && schema.contains("properties")) {
        for (const auto& [name, sub] : schema.at("properties").items()) {
            if (!value.contains(name)) continue;
            const std::string err =
                validate_against_schema(value.at(name), sub, where + "." + name);
            if (!err.empty()) return err;
        }
    }
    if (value.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i) {
            const std::string err = validate_against_schema(
                value.at(i), schema.at("items"), where + "[" + std::to_string(i) + "]");
            if (!err.empty()) return err;
        }
    }
    return "";
}

}  // namespace testsupport

#include "delaylyap/io.hpp"

#include <fstream>

namespace delaylyap {

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::IO, "matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array() || j[0].empty()) throw Error(ErrorCode::IO, "matrix rows must be arrays");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(ErrorCode::IO, "ragged matrix rows");
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto& cell = row[static_cast<size_t>(k)];
            if (!cell.is_number()) throw Error(ErrorCode::IO, "matrix entries must be numbers");
            m(i, k) = cell.get<double>();
        }
    }
    return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

TimeDelaySystem system_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw Error(ErrorCode::IO, "top level must be an object");
        if (!j.contains("n") || !j["n"].is_number_integer()) {
            throw Error(ErrorCode::IO, "missing integer field 'n'");
        }
        const auto n = j["n"].get<Eigen::Index>();
        if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty()) {
            throw Error(ErrorCode::IO, "missing non-empty array field 'terms'");
        }
        std::vector<Term> terms;
        for (const auto& tj : j["terms"]) {
            if (!tj.is_object() || !tj.contains("delay") || !tj.contains("A") ||
                !tj["delay"].is_number()) {
                throw Error(ErrorCode::IO, "each term needs numeric 'delay' and matrix 'A'");
            }
            Term t;
            t.delay = tj["delay"].get<double>();
            t.A = matrix_from_json(tj["A"]);
            if (t.A.rows() != n || t.A.cols() != n) {
                throw Error(ErrorCode::IO, "term matrix shape disagrees with 'n'");
            }
            terms.push_back(std::move(t));
        }
        Matrix W;
        if (j.contains("W")) {
            W = matrix_from_json(j["W"]);
            if (W.rows() != n || W.cols() != n) {
                throw Error(ErrorCode::IO, "'W' shape disagrees with 'n'");
            }
        }
        return TimeDelaySystem::create(std::move(terms), std::move(W));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::IO, std::string("bad system JSON: ") + e.what());
    }
}

TimeDelaySystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::IO, std::string("JSON parse failure in ") + path + ": " + e.what());
    }
    return system_from_json(j);
}

nlohmann::json system_to_json(const TimeDelaySystem& sys) {
    nlohmann::json j;
    j["n"] = sys.n;
    j["terms"] = nlohmann::json::array();
    for (const auto& t : sys.terms) {
        j["terms"].push_back({{"delay", t.delay}, {"A", matrix_to_json(t.A)}});
    }
    j["W"] = matrix_to_json(sys.W);
    return j;
}

} // namespace delaylyap

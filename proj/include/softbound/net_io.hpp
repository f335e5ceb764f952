#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "softbound/mlp.hpp"

namespace softbound {

/// Network JSON schema:
///   {"inputs": n, "members": [{"layers": [{"W": [[...]], "b": [...]}...]}...]}
/// W is row-major with one row per output neuron of the layer.
inline nlohmann::json ensemble_to_json(const Ensemble &e)
{
    e.validate();
    nlohmann::json doc;
    doc["inputs"] = e.input_dim();
    doc["members"] = nlohmann::json::array();
    for (const Mlp &net : e.members) {
        nlohmann::json member;
        member["layers"] = nlohmann::json::array();
        for (const Layer &layer : net.layers) {
            nlohmann::json jl;
            auto rows = nlohmann::json::array();
            for (std::size_t i = 0; i < layer.weights.rows; ++i) {
                auto row = nlohmann::json::array();
                for (std::size_t j = 0; j < layer.weights.cols; ++j)
                    row.push_back(layer.weights.at(i, j));
                rows.push_back(std::move(row));
            }
            jl["W"] = std::move(rows);
            jl["b"] = layer.bias;
            member["layers"].push_back(std::move(jl));
        }
        doc["members"].push_back(std::move(member));
    }
    return doc;
}

inline Ensemble ensemble_from_json(const nlohmann::json &doc)
{
    if (!doc.contains("inputs") || !doc.contains("members"))
        throw std::runtime_error("network json: missing 'inputs' or 'members'");
    std::size_t inputs = doc.at("inputs").get<std::size_t>();
    Ensemble e;
    for (const auto &member : doc.at("members")) {
        Mlp net;
        std::size_t prev = inputs;
        for (const auto &jl : member.at("layers")) {
            const auto &w = jl.at("W");
            Layer layer;
            layer.weights = Matrix(w.size(), prev);
            for (std::size_t i = 0; i < layer.weights.rows; ++i) {
                const auto &row = w.at(i);
                if (row.size() != prev)
                    throw std::runtime_error("network json: W row width mismatch");
                for (std::size_t j = 0; j < prev; ++j)
                    layer.weights.at(i, j) = row.at(j).get<double>();
            }
            layer.bias = jl.at("b").get<std::vector<double>>();
            if (layer.bias.size() != layer.weights.rows)
                throw std::runtime_error("network json: b length mismatch");
            prev = layer.weights.rows;
            net.layers.push_back(std::move(layer));
        }
        e.members.push_back(std::move(net));
    }
    e.validate();
    return e;
}

inline Ensemble load_ensemble(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open network file: " + path);
    nlohmann::json doc;
    in >> doc;
    return ensemble_from_json(doc);
}

inline void save_ensemble(const std::string &path, const Ensemble &e)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write network file: " + path);
    out << ensemble_to_json(e).dump(2) << '\n';
}

} // namespace softbound

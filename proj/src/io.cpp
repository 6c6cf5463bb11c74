#include "nsbox/io.hpp"

#include "nsbox/errors.hpp"

#include <fstream>

namespace nsbox {

namespace {

int require_size(const Json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw ParseError(std::string("system file: missing integer '") + key +
                         "'");
    const long long v = j[key].get<long long>();
    if (v < 1 || v > 1'000'000)
        throw ParseError(std::string("system file: '") + key +
                         "' out of range");
    return static_cast<int>(v);
}

} // namespace

LoadedSystem parse_system(const Json& j) {
    if (!j.is_object()) throw ParseError("system file: not a JSON object");
    const int X = require_size(j, "x_size");
    const int Y = require_size(j, "y_size");
    const int A = require_size(j, "a_size");
    const int B = require_size(j, "b_size");
    if (!j.contains("probs") || !j["probs"].is_array())
        throw ParseError("system file: missing 'probs' array");

    std::vector<Rational> entries;
    entries.reserve(static_cast<std::size_t>(X) * Y * A * B);
    bool has_float = false;

    const Json& probs = j["probs"];
    if (probs.size() != static_cast<std::size_t>(X))
        throw ParseError("system file: probs has wrong x dimension");
    for (int x = 0; x < X; ++x) {
        const Json& jy = probs[x];
        if (!jy.is_array() || jy.size() != static_cast<std::size_t>(Y))
            throw ParseError("system file: probs has wrong y dimension");
        for (int y = 0; y < Y; ++y) {
            const Json& ja = jy[y];
            if (!ja.is_array() || ja.size() != static_cast<std::size_t>(A))
                throw ParseError("system file: probs has wrong a dimension");
            for (int a = 0; a < A; ++a) {
                const Json& jb = ja[a];
                if (!jb.is_array() || jb.size() != static_cast<std::size_t>(B))
                    throw ParseError("system file: probs has wrong b dimension");
                for (int b = 0; b < B; ++b) {
                    const Json& e = jb[b];
                    if (e.is_string())
                        entries.push_back(parse_rational(e.get<std::string>()));
                    else if (e.is_number_integer())
                        entries.push_back(Rational(e.get<long long>()));
                    else if (e.is_number_float()) {
                        has_float = true;
                        entries.push_back(rational_from_double(e.get<double>()));
                    } else
                        throw ParseError(
                            "system file: entries must be \"num/den\" strings "
                            "or numbers");
                }
            }
        }
    }

    LoadedSystem out;
    out.floats.x_size = X;
    out.floats.y_size = Y;
    out.floats.a_size = A;
    out.floats.b_size = B;
    out.floats.probs.resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        out.floats.probs[i] = rational_to_double(entries[i]);

    if (!has_float) {
        ConditionalDistribution dist(X, Y, A, B);
        std::size_t i = 0;
        for (int x = 0; x < X; ++x)
            for (int y = 0; y < Y; ++y)
                for (int a = 0; a < A; ++a)
                    for (int b = 0; b < B; ++b)
                        dist.set(x, y, a, b, entries[i++]);
        out.exact = std::move(dist);
    }
    return out;
}

LoadedSystem load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid JSON in '" + path + "': " + e.what());
    }
    return parse_system(j);
}

Json system_to_json(const ConditionalDistribution& p) {
    Json j;
    j["schema_version"] = 1;
    j["x_size"] = p.x_size();
    j["y_size"] = p.y_size();
    j["a_size"] = p.a_size();
    j["b_size"] = p.b_size();
    Json probs = Json::array();
    for (int x = 0; x < p.x_size(); ++x) {
        Json jy = Json::array();
        for (int y = 0; y < p.y_size(); ++y) {
            Json ja = Json::array();
            for (int a = 0; a < p.a_size(); ++a) {
                Json jb = Json::array();
                for (int b = 0; b < p.b_size(); ++b)
                    jb.push_back(rational_str(p.at(x, y, a, b)));
                ja.push_back(std::move(jb));
            }
            jy.push_back(std::move(ja));
        }
        probs.push_back(std::move(jy));
    }
    j["probs"] = std::move(probs);
    return j;
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

} // namespace nsbox

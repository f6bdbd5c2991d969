#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "fsi/bench.hpp"
#include "fsi/mms.hpp"
#include "fsi/scheme.hpp"

namespace fsi {

// ---------------------------------------------------------------- CSV

/// Header plus rows of preformatted cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> r)
    {
        if (r.size() != header.size()) throw std::invalid_argument("csv: row width does not match the header");
        rows.push_back(std::move(r));
    }
};

/// Six significant digits. Missing values are written as empty cells.
inline std::string csv_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string csv_text(const CsvTable& t)
{
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << text;
    f.close();
    if (!f) throw std::runtime_error("write to '" + path.string() + "' failed");
}

inline void write_csv(const CsvTable& t, const std::filesystem::path& path) { write_text(path, csv_text(t)); }

/// h, tau, the four tabulated errors plus err_u_L2Sigma, then one order column
/// per error (empty on the first row).
inline CsvTable convergence_csv(const ConvergenceTable& t)
{
    CsvTable c;
    c.header = {"M", "h", "tau", "steps", "err_u_L2", "err_p_L2", "err_eta_L2Sigma", "err_eta_s", "err_u_L2Sigma",
                "order_u_L2", "order_p_L2", "order_eta_L2Sigma", "order_eta_s", "order_u_L2Sigma"};
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
        const auto& l = t.levels[i];
        const auto& e = l.final_errors;
        std::vector<std::string> r{std::to_string(l.M), csv_number(l.h), csv_number(l.tau), std::to_string(l.steps),
                                   csv_number(e.u_L2), csv_number(e.p_L2), csv_number(e.eta_L2_sigma), csv_number(e.eta_s),
                                   csv_number(e.u_L2_sigma)};
        if (i == 0) {
            for (int k = 0; k < 5; ++k) r.emplace_back();
        } else {
            const auto& o = t.pair_orders[i - 1];
            for (std::size_t k : {0u, 2u, 3u, 4u, 1u}) r.push_back(csv_number(o[k]));
        }
        c.add_row(std::move(r));
    }
    return c;
}

inline CsvTable energy_csv(const std::vector<EnergyRow>& rows)
{
    CsvTable c;
    c.header = {"n", "t", "E0", "E1", "per_step_residual"};
    for (const auto& e : rows) {
        c.add_row({std::to_string(e.n), csv_number(e.t), csv_number(e.E0), csv_number(e.E1), csv_number(e.residual)});
    }
    return c;
}

// ---------------------------------------------------------------- VTK

struct VtkFields {
    Vector velocity;      // coefficients of the velocity space (may be empty)
    Vector pressure;      // P1 coefficients (may be empty)
    Vector displacement;  // trace coefficients (may be empty)
};

/// Legacy ASCII unstructured grid with triangles (cell type 5). Without
/// refinement the fields are sampled at mesh vertices; with refinement each
/// P2 triangle is split into four through its edge nodes.
inline std::string vtk_text(const Discretization& d, const VtkFields& f, bool refine = false, const std::string& title = "fsi")
{
    const Mesh& m = *d.mesh;
    const FeSpace& V = d.velocity;
    const bool split = refine && V.kind == ElementKind::P2;

    std::vector<Point> pts;
    std::vector<std::size_t> vnode;  // velocity node of each output point
    std::vector<std::array<std::size_t, 3>> cells;
    if (split) {
        for (std::size_t n = 0; n < V.node_count(); ++n) {
            pts.push_back(V.node_coords[n]);
            vnode.push_back(n);
        }
        for (std::size_t e = 0; e < m.triangles.size(); ++e) {
            const auto& c = V.cell_nodes[e];
            // vertices 0,1,2; edge nodes 3:(0,1) 4:(1,2) 5:(2,0)
            cells.push_back({c[0], c[3], c[5]});
            cells.push_back({c[3], c[1], c[4]});
            cells.push_back({c[5], c[4], c[2]});
            cells.push_back({c[3], c[4], c[5]});
        }
    } else {
        for (std::size_t v = 0; v < m.vertices.size(); ++v) {
            pts.push_back(m.vertices[v]);
            vnode.push_back(V.vertex_node[v]);
        }
        for (const auto& t : m.triangles) cells.push_back(t);
    }
    const std::size_t np = pts.size();

    // pressure: P1, so the value at an edge node is the mean of its endpoints
    std::vector<double> pressure(np, 0.0);
    if (f.pressure.size() != 0) {
        if (split) {
            for (std::size_t e = 0; e < m.triangles.size(); ++e) {
                const auto& c = V.cell_nodes[e];
                double pv[3];
                for (std::size_t i = 0; i < 3; ++i) pv[i] = f.pressure[static_cast<Eigen::Index>(d.pressure.cell_nodes[e][i])];
                const double mids[3] = {0.5 * (pv[0] + pv[1]), 0.5 * (pv[1] + pv[2]), 0.5 * (pv[2] + pv[0])};
                for (std::size_t i = 0; i < 3; ++i) pressure[c[i]] = pv[i];
                for (std::size_t i = 0; i < 3; ++i) pressure[c[3 + i]] = mids[i];
            }
        } else {
            for (std::size_t v = 0; v < np; ++v) pressure[v] = f.pressure[static_cast<Eigen::Index>(d.pressure.vertex_node[v])];
        }
    }
    std::vector<Vec2> vel(np, Vec2{0.0, 0.0}), disp(np, Vec2{0.0, 0.0});
    if (f.velocity.size() != 0) {
        for (std::size_t i = 0; i < np; ++i) {
            vel[i] = {f.velocity[static_cast<Eigen::Index>(V.dof(vnode[i], 0))], f.velocity[static_cast<Eigen::Index>(V.dof(vnode[i], 1))]};
        }
    }
    if (f.displacement.size() != 0) {
        std::map<std::size_t, std::size_t> point_of;
        for (std::size_t i = 0; i < np; ++i) point_of[vnode[i]] = i;
        const TraceSpace& S = d.trace;
        for (std::size_t k = 0; k < S.node_count(); ++k) {
            auto it = point_of.find(S.velocity_node[k]);
            if (it == point_of.end()) continue;
            disp[it->second] = {f.displacement[static_cast<Eigen::Index>(S.dof(k, 0))], f.displacement[static_cast<Eigen::Index>(S.dof(k, 1))]};
        }
    }

    std::ostringstream os;
    os.precision(10);
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << np << " double\n";
    for (const auto& p : pts) os << p.x << ' ' << p.y << " 0\n";
    os << "CELLS " << cells.size() << ' ' << 4 * cells.size() << '\n';
    for (const auto& c : cells) os << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    os << "CELL_TYPES " << cells.size() << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) os << "5\n";
    os << "POINT_DATA " << np << '\n';
    os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (double v : pressure) os << v << '\n';
    os << "VECTORS velocity double\n";
    for (const auto& v : vel) os << v[0] << ' ' << v[1] << " 0\n";
    os << "VECTORS displacement double\n";
    for (const auto& v : disp) os << v[0] << ' ' << v[1] << " 0\n";
    return os.str();
}

inline void write_vtk(const Discretization& d, const VtkFields& f, const std::filesystem::path& path, bool refine = false)
{
    write_text(path, vtk_text(d, f, refine, path.filename().string()));
}

// ---------------------------------------------------------------- hashing / manifest

/// git's blob id: SHA-1 of "blob <size>\0" followed by the content.
inline std::string git_blob_sha1(const std::string& content)
{
    const std::string head = "blob " + std::to_string(content.size()) + '\0';
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("sha1: cannot allocate digest context");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 && EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("sha1: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------- config

/// Run configuration. The file form is one `key = value` per line; `#` starts a
/// comment, blank lines are ignored, lists are comma separated. Unknown keys and
/// malformed values are errors that name the line.
struct SimConfig {
    std::string command = "convergence";
    Element element = Element::TaylorHood;
    BoundaryMode bc = BoundaryMode::Periodic;
    std::vector<std::size_t> levels{8, 16, 32};
    std::vector<std::size_t> rd_levels{8, 16, 32};
    double beta = 0.5;
    TauRule tau;
    double T = 0.1;
    double rho_f = 1.0;
    double mu = 1.0;
    double rho_s = 1.0;
    double eps_s = 1.0;
    double C0 = 1.0;
    double C1 = 1.0;
    std::string out = "out";
    unsigned seed = 20240607;
    std::size_t steps = 200;
    std::size_t M = 16;
    std::size_t jobs = 1;
    bool refine_vtk = false;
    std::string ends = "natural";
    std::vector<double> taus{1e-2, 5e-3, 2.5e-3};
    std::vector<double> snapshots{0.003, 0.009, 0.016, 0.026};

    PhysicalParams params() const
    {
        PhysicalParams p;
        p.rho_f = rho_f;
        p.mu = mu;
        p.rho_s = rho_s;
        p.eps_s = eps_s;
        p.C0 = C0;
        p.C1 = C1;
        p.beta = beta;
        return p;
    }

    bool operator==(const SimConfig&) const = default;
};

namespace detail {

inline std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + f(v[i]);
    return s;
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline double parse_double(const std::string& s)
{
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters in number '" + s + "'");
    return v;
}

inline std::size_t parse_size(const std::string& s)
{
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument("expected a nonnegative integer, got '" + s + "'");
    return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace detail

inline Element parse_element(const std::string& s)
{
    if (s == "th") return Element::TaylorHood;
    if (s == "mini") return Element::Mini;
    throw std::invalid_argument("element must be th or mini, got '" + s + "'");
}

inline BoundaryMode parse_bc(const std::string& s)
{
    if (s == "periodic") return BoundaryMode::Periodic;
    if (s == "dirichlet") return BoundaryMode::Dirichlet;
    throw std::invalid_argument("bc must be periodic or dirichlet, got '" + s + "'");
}

inline StructureEnds parse_ends(const std::string& s)
{
    if (s == "natural") return StructureEnds::Natural;
    if (s == "pinned") return StructureEnds::Pinned;
    if (s == "periodic") return StructureEnds::Periodic;
    throw std::invalid_argument("ends must be natural, pinned or periodic, got '" + s + "'");
}

inline std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& c)
{
    using detail::fmt_double;
    return {
        {"command", c.command},
        {"element", to_string(c.element)},
        {"bc", to_string(c.bc)},
        {"levels", detail::join(c.levels, [](std::size_t v) { return std::to_string(v); })},
        {"rd_levels", detail::join(c.rd_levels, [](std::size_t v) { return std::to_string(v); })},
        {"beta", fmt_double(c.beta)},
        {"tau", c.tau.str()},
        {"T", fmt_double(c.T)},
        {"rho_f", fmt_double(c.rho_f)},
        {"mu", fmt_double(c.mu)},
        {"rho_s", fmt_double(c.rho_s)},
        {"eps_s", fmt_double(c.eps_s)},
        {"C0", fmt_double(c.C0)},
        {"C1", fmt_double(c.C1)},
        {"out", c.out},
        {"seed", std::to_string(c.seed)},
        {"steps", std::to_string(c.steps)},
        {"M", std::to_string(c.M)},
        {"jobs", std::to_string(c.jobs)},
        {"refine_vtk", c.refine_vtk ? "true" : "false"},
        {"ends", c.ends},
        {"taus", detail::join(c.taus, fmt_double)},
        {"snapshots", detail::join(c.snapshots, fmt_double)},
    };
}

inline std::string serialize_config(const SimConfig& c)
{
    std::string s;
    for (const auto& [k, v] : config_entries(c)) s += k + " = " + v + "\n";
    return s;
}

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& what)
        : std::runtime_error("config line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

/// Applies one key to the config; throws std::invalid_argument on bad input.
inline void set_config_value(SimConfig& c, const std::string& key, const std::string& v)
{
    using namespace detail;
    if (key == "command") c.command = v;
    else if (key == "element") c.element = parse_element(v);
    else if (key == "bc") c.bc = parse_bc(v);
    else if (key == "levels") {
        c.levels.clear();
        for (const auto& s : split(v, ',')) c.levels.push_back(parse_size(s));
    }
    else if (key == "rd_levels") {
        c.rd_levels.clear();
        for (const auto& s : split(v, ',')) c.rd_levels.push_back(parse_size(s));
    }
    else if (key == "beta") c.beta = parse_double(v);
    else if (key == "tau") c.tau = TauRule::parse(v);
    else if (key == "T") c.T = parse_double(v);
    else if (key == "rho_f") c.rho_f = parse_double(v);
    else if (key == "mu") c.mu = parse_double(v);
    else if (key == "rho_s") c.rho_s = parse_double(v);
    else if (key == "eps_s") c.eps_s = parse_double(v);
    else if (key == "C0") c.C0 = parse_double(v);
    else if (key == "C1") c.C1 = parse_double(v);
    else if (key == "out") c.out = v;
    else if (key == "seed") c.seed = static_cast<unsigned>(parse_size(v));
    else if (key == "steps") c.steps = parse_size(v);
    else if (key == "M") c.M = parse_size(v);
    else if (key == "jobs") c.jobs = parse_size(v);
    else if (key == "refine_vtk") {
        if (v != "true" && v != "false") throw std::invalid_argument("refine_vtk must be true or false");
        c.refine_vtk = v == "true";
    }
    else if (key == "ends") {
        parse_ends(v);
        c.ends = v;
    }
    else if (key == "taus") {
        c.taus.clear();
        for (const auto& s : split(v, ',')) c.taus.push_back(parse_double(s));
    }
    else if (key == "snapshots") {
        c.snapshots.clear();
        for (const auto& s : split(v, ',')) c.snapshots.push_back(parse_double(s));
    }
    else throw std::invalid_argument("unknown key '" + key + "'");
}

/// `touched`, if given, collects the keys the text sets.
inline SimConfig parse_config(const std::string& text, SimConfig base = {}, std::set<std::string>* touched = nullptr)
{
    std::istringstream is(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(is, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(no, "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            set_config_value(base, key, value);
            if (touched) touched->insert(key);
        } catch (const std::exception& e) {
            throw ConfigError(no, e.what());
        }
    }
    return base;
}

inline SimConfig load_config(const std::filesystem::path& path, SimConfig base = {}, std::set<std::string>* touched = nullptr)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config '" + path.string() + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config(os.str(), std::move(base), touched);
}

/// manifest.json: config echo plus the git blob id of each output, sorted by name.
inline nlohmann::json make_manifest(const SimConfig& c, const std::vector<std::filesystem::path>& outputs,
                                    const std::filesystem::path& root)
{
    nlohmann::json j;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_entries(c)) cfg[k] = v;
    j["config"] = cfg;
    std::vector<std::filesystem::path> sorted = outputs;
    std::sort(sorted.begin(), sorted.end());
    nlohmann::json files = nlohmann::json::array();
    for (const auto& p : sorted) {
        const std::string text = read_text(p);
        files.push_back({{"path", std::filesystem::relative(p, root).generic_string()}, {"bytes", text.size()}, {"sha1", git_blob_sha1(text)}});
    }
    j["outputs"] = files;
    return j;
}

inline void write_manifest(const SimConfig& c, const std::vector<std::filesystem::path>& outputs, const std::filesystem::path& root)
{
    write_text(root / "manifest.json", make_manifest(c, outputs, root).dump(2) + "\n");
}

}  // namespace fsi

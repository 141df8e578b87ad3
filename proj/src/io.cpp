#include "strikelab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace strikelab::io {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
    throw FormatError(source + ":" + std::to_string(line) + ": " + msg);
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// Row-major flattening.
json matrix_json(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    return out;
}

Eigen::VectorXd vector_from(const json& j, const std::string& what) {
    if (!j.is_array()) throw FormatError(what + ": expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw FormatError(what + ": expected an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd matrix_from(const json& j, int n, const std::string& what) {
    const Eigen::VectorXd flat = vector_from(j, what);
    if (flat.size() != static_cast<Eigen::Index>(n) * n)
        throw FormatError(what + ": expected " + std::to_string(n * n) + " entries");
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = flat[static_cast<Eigen::Index>(r) * n + c];
    return m;
}

const json& field(const json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(what + ": missing field '" + key + "'");
    return j.at(key);
}

json vec3_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Matrix3d rpy_matrix(const Eigen::Vector3d& rpy) {
    return (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

Eigen::Vector3d matrix_rpy(const Eigen::Matrix3d& r) {
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    return {roll, pitch, yaw};
}

json transform_json(const Eigen::Isometry3d& t) {
    return {{"translation", vec3_json(t.translation())}, {"rotation_rpy", vec3_json(matrix_rpy(t.linear()))}};
}

/// Walks one JSON object of a config document: typed optional fields,
/// field-path errors, and a final check for unknown keys.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw sim::ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw sim::ConfigError(at(key), "expected a number");
            out = v->get<double>();
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw sim::ConfigError(at(key), "expected an integer");
            out = v->get<int>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw sim::ConfigError(at(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void vec3(const std::string& key, Eigen::Vector3d& out) {
        if (const json* v = find(key)) {
            if (!v->is_array() || v->size() != 3) throw sim::ConfigError(at(key), "expected 3 numbers");
            for (int i = 0; i < 3; ++i) {
                if (!(*v)[static_cast<std::size_t>(i)].is_number()) throw sim::ConfigError(at(key), "expected 3 numbers");
                out[i] = (*v)[static_cast<std::size_t>(i)].get<double>();
            }
        }
    }

    template <class F>
    void object(const std::string& key, F&& body) {
        if (const json* v = find(key)) {
            Fields sub(*v, at(key));
            body(sub);
            sub.finish();
        }
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.contains(key)) throw sim::ConfigError(at(key), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw FormatError("not a number: '" + t + "'");
    return v;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json primitive_to_json(const promp::PrimitiveParams& p) {
    json j;
    j["schema_version"] = kPrimitiveSchemaVersion;
    j["basis"] = {{"K", p.basis.n_basis},
                  {"D", p.basis.n_dof},
                  {"h", p.basis.bandwidth},
                  {"phase_duration", p.basis.phase_duration},
                  {"centers", vector_json(p.basis.centers)}};
    j["mu_w"] = vector_json(p.mu_w);
    j["sigma_w_rowmajor"] = matrix_json(p.sigma_w);
    j["sigma_y_rowmajor"] = matrix_json(p.sigma_y);
    return j;
}

promp::PrimitiveParams primitive_from_json(const json& j) {
    const std::string what = "primitive";
    const json& version = field(j, "schema_version", what);
    if (!version.is_number_integer() || version.get<int>() != kPrimitiveSchemaVersion)
        throw FormatError(what + ": unsupported schema_version");
    const json& b = field(j, "basis", what);
    promp::PrimitiveParams p;
    try {
        p.basis.n_basis = field(b, "K", what + ".basis").get<int>();
        p.basis.n_dof = field(b, "D", what + ".basis").get<int>();
        p.basis.bandwidth = field(b, "h", what + ".basis").get<double>();
        p.basis.phase_duration = field(b, "phase_duration", what + ".basis").get<double>();
    } catch (const json::type_error&) {
        throw FormatError(what + ".basis: wrong field type");
    }
    p.basis.centers = vector_from(field(b, "centers", what + ".basis"), what + ".basis.centers");
    if (p.basis.n_basis < 1 || p.basis.n_dof < 1) throw FormatError(what + ".basis: K and D must be >= 1");
    p.mu_w = vector_from(field(j, "mu_w", what), what + ".mu_w");
    p.sigma_w = matrix_from(field(j, "sigma_w_rowmajor", what), p.basis.weight_dim(), what + ".sigma_w_rowmajor");
    p.sigma_y = matrix_from(field(j, "sigma_y_rowmajor", what), p.basis.n_dof, what + ".sigma_y_rowmajor");
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(what + ": " + e.what());
    }
    return p;
}

void save_primitive(const std::filesystem::path& path, const promp::PrimitiveParams& p) {
    write_text_atomic(path, dump(primitive_to_json(p)));
}

promp::PrimitiveParams load_primitive(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    try {
        return primitive_from_json(j);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

json chain_to_json(const kinematics::KinematicChain& chain) {
    json joints = json::array();
    for (const auto& jt : chain.joints()) {
        json o = transform_json(jt.fixed);
        o["kind"] = jt.kind == kinematics::JointKind::prismatic ? "prismatic" : "revolute";
        o["axis"] = vec3_json(jt.axis);
        joints.push_back(o);
    }
    return {{"joints", joints}, {"tool", transform_json(chain.tool())}};
}

namespace {

Eigen::Isometry3d transform_from(Fields& f) {
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
    f.vec3("translation", translation);
    f.vec3("rotation_rpy", rpy);
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = rpy_matrix(rpy);
    t.translation() = translation;
    return t;
}

}  // namespace

kinematics::KinematicChain chain_from_json(const json& j, const std::string& path) {
    return chain_config_from_json(j, path).chain;
}

ChainConfig chain_config_from_json(const json& j, const std::string& path) {
    Fields f(j, path);
    const json* joints = f.find("joints");
    if (!joints || !joints->is_array()) throw sim::ConfigError(f.at("joints"), "expected an array of joints");
    std::vector<kinematics::Joint> out;
    for (std::size_t i = 0; i < joints->size(); ++i) {
        const std::string jp = f.at("joints") + "[" + std::to_string(i) + "]";
        Fields jf((*joints)[i], jp);
        kinematics::Joint jt;
        const json* kind = jf.find("kind");
        if (!kind || !kind->is_string()) throw sim::ConfigError(jp + ".kind", "expected \"prismatic\" or \"revolute\"");
        if (*kind == "prismatic")
            jt.kind = kinematics::JointKind::prismatic;
        else if (*kind == "revolute")
            jt.kind = kinematics::JointKind::revolute;
        else
            throw sim::ConfigError(jp + ".kind", "expected \"prismatic\" or \"revolute\"");
        jf.vec3("axis", jt.axis);
        jt.fixed = transform_from(jf);
        jf.finish();
        out.push_back(jt);
    }
    Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();
    f.object("tool", [&](Fields& tf) { tool = transform_from(tf); });
    ChainConfig cfg;
    if (const json* l = f.find("limits")) cfg.limits = limits_from_json(*l, f.at("limits"));
    f.finish();
    try {
        cfg.chain = kinematics::KinematicChain(std::move(out), tool);
    } catch (const std::invalid_argument& e) {
        throw sim::ConfigError(path, e.what());
    }
    if (cfg.limits) {
        try {
            cfg.limits->validate(cfg.chain.size());
        } catch (const std::invalid_argument& e) {
            throw sim::ConfigError(f.at("limits"), e.what());
        }
    }
    return cfg;
}

json chain_config_to_json(const kinematics::KinematicChain& chain, const kinematics::Limits& limits) {
    json j = chain_to_json(chain);
    j["limits"] = limits_to_json(limits);
    return j;
}

json limits_to_json(const kinematics::Limits& limits) {
    return {{"LL", vector_json(limits.lower)}, {"UL", vector_json(limits.upper)}};
}

kinematics::Limits limits_from_json(const json& j, const std::string& path) {
    Fields f(j, path);
    kinematics::Limits l;
    for (auto [key, target] : {std::pair{"LL", &l.lower}, std::pair{"UL", &l.upper}}) {
        const json* v = f.find(key);
        if (!v) throw sim::ConfigError(f.at(key), "missing");
        try {
            *target = vector_from(*v, f.at(key));
        } catch (const FormatError&) {
            throw sim::ConfigError(f.at(key), "expected an array of numbers");
        }
    }
    f.finish();
    return l;
}

json scenario_to_json(const sim::Scenario& s) {
    json j;
    j["chain"] = chain_config_to_json(s.chain, s.limits);
    j["plane"] = {{"point", vec3_json(s.plane.point)}, {"normal", vec3_json(s.plane.normal)}};
    j["launch"] = {{"p0", vec3_json(s.launch.p0)},         {"v0", vec3_json(s.launch.v0)},
                   {"p0_std", vec3_json(s.launch.p0_std)}, {"v0_std", vec3_json(s.launch.v0_std)},
                   {"drag", s.launch.drag},                {"interval", s.launch.interval}};
    j["court"] = {{"net_distance", s.court.net_distance},
                  {"net_height", s.court.net_height},
                  {"net_half_width", s.court.net_half_width},
                  {"pillar_band", s.court.pillar_band}};
    j["cameras"] = {{"sources", s.cameras.sources},
                    {"rate", s.cameras.rate},
                    {"noise_std", s.cameras.noise_std},
                    {"latency", s.cameras.latency},
                    {"jitter", s.cameras.jitter}};
    const auto& c = s.controller;
    j["controller"] = {{"tick_rate", c.tick_rate},
                       {"min_lead", c.min_lead},
                       {"min_observations", c.min_observations},
                       {"horizon", c.horizon},
                       {"recovery_time", c.recovery_time},
                       {"condition_noise", c.condition_noise},
                       {"rail_speed", c.rail_speed},
                       {"ik",
                        {{"max_iter", c.ik.max_iter},
                         {"tol", c.ik.tol},
                         {"damping", c.ik.damping},
                         {"step_cap_enabled", c.ik.step_cap_enabled},
                         {"step_cap", c.ik.step_cap}}}};
    j["execution"] = {{"lag_tau", s.execution.lag_tau}, {"joint_noise_std", s.execution.joint_noise_std}};
    j["racket"] = {{"radius", s.racket.radius},
                   {"restitution", s.racket.restitution},
                   {"close_miss", s.racket.close_miss}};
    j["flight"] = {{"gravity", vec3_json(s.flight.gravity)},
                   {"q_position", s.flight.q_position},
                   {"q_velocity", s.flight.q_velocity},
                   {"max_substep", s.flight.max_substep}};
    j["segmentation"] = {{"v_on", s.segmentation.v_on},
                         {"v_off", s.segmentation.v_off},
                         {"min_hold", s.segmentation.min_hold},
                         {"window", s.segmentation.window},
                         {"rest_level", s.segmentation.rest_level}};
    j["episode_duration"] = s.episode_duration;
    j["phase_samples"] = s.phase_samples;
    return j;
}

sim::Scenario scenario_from_json(const json& j) {
    sim::Scenario s;
    Fields f(j, "");
    if (const json* c = f.find("chain")) {
        auto cfg = chain_config_from_json(*c, "chain");
        s.chain = std::move(cfg.chain);
        s.limits = cfg.limits ? *cfg.limits : kinematics::Limits::default_limits(s.chain.arm_dof());
    }
    if (const json* l = f.find("limits")) s.limits = limits_from_json(*l, "limits");
    f.object("plane", [&](Fields& o) {
        o.vec3("point", s.plane.point);
        o.vec3("normal", s.plane.normal);
    });
    f.object("launch", [&](Fields& o) {
        o.vec3("p0", s.launch.p0);
        o.vec3("v0", s.launch.v0);
        o.vec3("p0_std", s.launch.p0_std);
        o.vec3("v0_std", s.launch.v0_std);
        o.number("drag", s.launch.drag);
        o.number("interval", s.launch.interval);
    });
    f.object("court", [&](Fields& o) {
        o.number("net_distance", s.court.net_distance);
        o.number("net_height", s.court.net_height);
        o.number("net_half_width", s.court.net_half_width);
        o.number("pillar_band", s.court.pillar_band);
    });
    f.object("cameras", [&](Fields& o) {
        o.integer("sources", s.cameras.sources);
        o.number("rate", s.cameras.rate);
        o.number("noise_std", s.cameras.noise_std);
        o.number("latency", s.cameras.latency);
        o.number("jitter", s.cameras.jitter);
    });
    f.object("controller", [&](Fields& o) {
        auto& c = s.controller;
        o.number("tick_rate", c.tick_rate);
        o.number("min_lead", c.min_lead);
        o.integer("min_observations", c.min_observations);
        o.number("horizon", c.horizon);
        o.number("recovery_time", c.recovery_time);
        o.number("condition_noise", c.condition_noise);
        o.number("rail_speed", c.rail_speed);
        o.object("ik", [&](Fields& k) {
            k.integer("max_iter", c.ik.max_iter);
            k.number("tol", c.ik.tol);
            k.number("damping", c.ik.damping);
            k.boolean("step_cap_enabled", c.ik.step_cap_enabled);
            k.number("step_cap", c.ik.step_cap);
        });
    });
    f.object("execution", [&](Fields& o) {
        o.number("lag_tau", s.execution.lag_tau);
        o.number("joint_noise_std", s.execution.joint_noise_std);
    });
    f.object("racket", [&](Fields& o) {
        o.number("radius", s.racket.radius);
        o.number("restitution", s.racket.restitution);
        o.number("close_miss", s.racket.close_miss);
    });
    f.object("flight", [&](Fields& o) {
        o.vec3("gravity", s.flight.gravity);
        o.number("q_position", s.flight.q_position);
        o.number("q_velocity", s.flight.q_velocity);
        o.number("max_substep", s.flight.max_substep);
    });
    f.object("segmentation", [&](Fields& o) {
        o.number("v_on", s.segmentation.v_on);
        o.number("v_off", s.segmentation.v_off);
        o.integer("min_hold", s.segmentation.min_hold);
        o.integer("window", s.segmentation.window);
        o.number("rest_level", s.segmentation.rest_level);
    });
    f.number("episode_duration", s.episode_duration);
    f.integer("phase_samples", s.phase_samples);
    f.finish();
    s.validate();
    return s;
}

sim::Scenario load_scenario(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

void write_recording(std::ostream& os, const segment::Recording& rec, bool with_velocities) {
    os << "# D=" << rec.dof() << " names=";
    for (int d = 0; d < rec.dof(); ++d) {
        if (d) os << ',';
        os << (d < static_cast<int>(rec.names.size()) ? rec.names[static_cast<std::size_t>(d)] : "q" + std::to_string(d + 1));
    }
    os << '\n';
    const bool vel = with_velocities && rec.velocities.rows() == rec.positions.rows();
    for (int t = 0; t < rec.samples(); ++t) {
        os << format_double(rec.timestamps[t]);
        for (int d = 0; d < rec.dof(); ++d) os << ", " << format_double(rec.positions(t, d));
        if (vel)
            for (int d = 0; d < rec.dof(); ++d) os << ", " << format_double(rec.velocities(t, d));
        os << '\n';
    }
}

segment::Recording read_recording(std::istream& is, const std::string& source) {
    std::string line;
    int lineno = 0;
    int dof = -1;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            if (dof >= 0) continue;
            std::istringstream hs(t.substr(1));
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("D=", 0) == 0) {
                    try {
                        dof = std::stoi(tok.substr(2));
                    } catch (const std::exception&) {
                        fail(source, lineno, "bad D in header");
                    }
                } else if (tok.rfind("names=", 0) == 0) {
                    names = split(tok.substr(6), ',');
                }
            }
            if (dof < 1) fail(source, lineno, "header needs D >= 1");
            continue;
        }
        if (dof < 0) fail(source, lineno, "missing '# D=... names=...' header");
        const auto cells = split(t, ',');
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                row.push_back(parse_double(c));
            } catch (const FormatError& e) {
                fail(source, lineno, e.what());
            }
        }
        const auto n = static_cast<int>(row.size());
        if (n != 1 + dof && n != 1 + 2 * dof)
            fail(source, lineno, "expected " + std::to_string(1 + dof) + " or " + std::to_string(1 + 2 * dof) + " columns");
        if (!rows.empty() && rows.front().size() != row.size()) fail(source, lineno, "column count changed");
        rows.push_back(std::move(row));
    }
    if (dof < 0) throw FormatError(source + ": empty recording");
    if (!names.empty() && static_cast<int>(names.size()) != dof)
        throw FormatError(source + ": header names do not match D");

    const auto T = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd stamps(T);
    RowMatrix q(T, dof);
    const bool vel = !rows.empty() && static_cast<int>(rows.front().size()) == 1 + 2 * dof;
    RowMatrix qd(vel ? T : 0, dof);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& r = rows[static_cast<std::size_t>(t)];
        stamps[t] = r[0];
        for (int d = 0; d < dof; ++d) q(t, d) = r[static_cast<std::size_t>(1 + d)];
        if (vel)
            for (int d = 0; d < dof; ++d) qd(t, d) = r[static_cast<std::size_t>(1 + dof + d)];
    }
    segment::Recording rec;
    if (vel) {
        rec.timestamps = std::move(stamps);
        rec.positions = std::move(q);
        rec.velocities = std::move(qd);
        rec.names = std::move(names);
    } else {
        if (T < 2) throw FormatError(source + ": need at least 2 samples");
        rec = segment::Recording::from_positions(std::move(stamps), std::move(q), std::move(names));
    }
    try {
        rec.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(source + ": " + e.what());
    }
    return rec;
}

void save_recording(const std::filesystem::path& path, const segment::Recording& rec, bool with_velocities) {
    std::ostringstream os;
    write_recording(os, rec, with_velocities);
    write_text_atomic(path, os.str());
}

segment::Recording load_recording(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_recording(in, path.string());
}

void write_feedback(std::ostream& os, const std::vector<refine::FeedbackRecord>& records) {
    os << "trajectory_id,reward\n";
    for (const auto& r : records) os << r.trajectory_id << ',' << format_double(r.reward) << '\n';
}

std::vector<refine::FeedbackRecord> read_feedback(std::istream& is, const std::string& source) {
    std::vector<refine::FeedbackRecord> out;
    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = split(t, ',');
        if (cells.size() != 2) fail(source, lineno, "expected 'trajectory_id,reward'");
        if (out.empty() && ids.empty() && cells[0] == "trajectory_id" && cells[1] == "reward") continue;
        refine::FeedbackRecord rec;
        rec.trajectory_id = cells[0];
        if (rec.trajectory_id.empty()) fail(source, lineno, "empty trajectory id");
        try {
            rec.reward = parse_double(cells[1]);
        } catch (const FormatError& e) {
            fail(source, lineno, e.what());
        }
        if (!refine::is_valid_reward(rec.reward))
            fail(source, lineno, "reward " + cells[1] + " is not one of 0, 0.25, 0.5, 1, 2");
        if (!ids.insert(rec.trajectory_id).second) fail(source, lineno, "duplicate trajectory id " + rec.trajectory_id);
        out.push_back(rec);
    }
    return out;
}

std::vector<refine::FeedbackRecord> load_feedback(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_feedback(in, path.string());
}

void write_observations(std::ostream& os, const std::vector<tracker::Observation>& observations) {
    os << "stamp,source_id,x,y,z,noise_std\n";
    for (const auto& o : observations)
        os << format_double(o.stamp) << ',' << o.source_id << ',' << format_double(o.position.x()) << ','
           << format_double(o.position.y()) << ',' << format_double(o.position.z()) << ','
           << format_double(o.noise_std) << '\n';
}

std::vector<tracker::Observation> read_observations(std::istream& is, const std::string& source) {
    std::vector<tracker::Observation> out;
    std::string line;
    int lineno = 0;
    bool first = true;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = split(t, ',');
        if (first && !cells.empty() && cells[0] == "stamp") {
            first = false;
            continue;
        }
        first = false;
        if (cells.size() != 6) fail(source, lineno, "expected 'stamp,source_id,x,y,z,noise_std'");
        tracker::Observation o;
        try {
            o.stamp = parse_double(cells[0]);
            const double id = parse_double(cells[1]);
            if (id != std::floor(id) || id < 0) fail(source, lineno, "source_id must be a non-negative integer");
            o.source_id = static_cast<int>(id);
            for (int k = 0; k < 3; ++k) o.position[k] = parse_double(cells[static_cast<std::size_t>(2 + k)]);
            o.noise_std = parse_double(cells[5]);
        } catch (const FormatError& e) {
            fail(source, lineno, e.what());
        }
        if (!(o.noise_std > 0.0)) fail(source, lineno, "noise_std must be > 0");
        out.push_back(o);
    }
    return out;
}

json reward_json(double reward) {
    if (reward == std::floor(reward)) return static_cast<int>(reward);
    return reward;
}

json metrics_to_json(const sim::ExperimentMetrics& m) {
    return {{"balls", m.balls}, {"hit_rate", m.hit_rate}, {"success_rate", m.success_rate}, {"avg_reward", m.avg_reward}};
}

json report_to_json(const sim::RefinementReport& report) {
    json rounds = json::array();
    for (const auto& r : report.rounds) {
        rounds.push_back({{"round", r.round},
                          {"trajectories", r.trajectories},
                          {"evaluation", metrics_to_json(r.evaluation)},
                          {"batch", r.batch ? metrics_to_json(*r.batch) : json(nullptr)},
                          {"used", r.used},
                          {"em_iterations", r.em_iterations}});
    }
    return {{"rounds", rounds},
            {"aborted_round", report.aborted_round ? json(*report.aborted_round) : json(nullptr)}};
}

json outcome_to_json(const sim::EpisodeOutcome& o) {
    const auto finite_or_null = [](const Eigen::Vector3d& v) { return v.allFinite() ? vec3_json(v) : json(nullptr); };
    return {{"hit", o.hit},
            {"min_racket_ball_distance", o.min_racket_ball_distance},
            {"return_crossed_net", o.return_crossed_net},
            {"return_hit_pillar_zone", o.return_hit_pillar_zone},
            {"reward", reward_json(o.reward)},
            {"swung", o.swung},
            {"aborted", o.aborted},
            {"z_hit", o.z_hit},
            {"phase_duration", o.phase_duration},
            {"stroke_start", o.stroke_start},
            {"t_hit_predicted", o.t_hit_predicted},
            {"contact_time", o.hit ? json(o.contact_time) : json(nullptr)},
            {"net_crossing", o.hit ? finite_or_null(o.net_crossing) : json(nullptr)},
            {"ik_failures", o.ik_failures},
            {"rejected_observations", o.rejected_observations},
            {"limit_violation", o.limit_violation}};
}

}  // namespace strikelab::io

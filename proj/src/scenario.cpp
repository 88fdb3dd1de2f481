#include "zoro/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace zoro
{
    using nlohmann::json;

    namespace
    {
        // Reads an object key by key and rejects whatever was not read.
        class ObjectReader
        {
        public:
            ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path))
            {
                if (!j_.is_object())
                    throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
            }

            std::string key(const std::string &name) const { return path_.empty() ? name : path_ + "." + name; }

            const json *find(const std::string &name)
            {
                seen_.insert(name);
                auto it = j_.find(name);
                return it == j_.end() || it->is_null() ? nullptr : &*it;
            }

            template <class T>
            void get(const std::string &name, T &out)
            {
                if (const json *v = find(name))
                {
                    try
                    {
                        out = v->get<T>();
                    }
                    catch (const json::exception &)
                    {
                        throw ConfigError(key(name), "wrong type");
                    }
                }
            }

            void finish() const
            {
                for (auto it = j_.begin(); it != j_.end(); ++it)
                    if (!seen_.count(it.key()))
                        throw ConfigError(key(it.key()), "unknown key");
            }

        private:
            const json &j_;
            std::string path_;
            std::set<std::string> seen_;
        };

        // 5-vector (diagonal) or 5x5 nested array.
        ShapeMatrix read_shape(const json &v, const std::string &key)
        {
            ShapeMatrix M = ShapeMatrix::Zero();
            try
            {
                if (!v.is_array() || v.size() != static_cast<std::size_t>(kNs))
                    throw ConfigError(key, "expected 5 diagonal entries or a 5x5 matrix");
                if (v.front().is_array())
                {
                    for (int i = 0; i < kNs; ++i)
                    {
                        const json &row = v.at(static_cast<std::size_t>(i));
                        if (!row.is_array() || row.size() != static_cast<std::size_t>(kNs))
                            throw ConfigError(key, "expected a 5x5 matrix");
                        for (int c = 0; c < kNs; ++c)
                            M(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
                    }
                }
                else
                {
                    for (int i = 0; i < kNs; ++i)
                        M(i, i) = v.at(static_cast<std::size_t>(i)).get<double>();
                }
            }
            catch (const json::exception &)
            {
                throw ConfigError(key, "expected numbers");
            }
            return M;
        }

        json write_shape(const ShapeMatrix &M)
        {
            if (M.isDiagonal(0.0))
            {
                json diag = json::array();
                for (int i = 0; i < kNs; ++i)
                    diag.push_back(M(i, i));
                return diag;
            }
            json rows = json::array();
            for (int i = 0; i < kNs; ++i)
            {
                json row = json::array();
                for (int c = 0; c < kNs; ++c)
                    row.push_back(M(i, c));
                rows.push_back(row);
            }
            return rows;
        }

        template <int n>
        Eigen::Matrix<double, n, n> read_diagonal(const json &v, const std::string &key)
        {
            if (!v.is_array() || v.size() != static_cast<std::size_t>(n))
                throw ConfigError(key, "expected " + std::to_string(n) + " diagonal entries");
            Eigen::Matrix<double, n, n> M = Eigen::Matrix<double, n, n>::Zero();
            try
            {
                for (int i = 0; i < n; ++i)
                    M(i, i) = v.at(static_cast<std::size_t>(i)).get<double>();
            }
            catch (const json::exception &)
            {
                throw ConfigError(key, "expected numbers");
            }
            return M;
        }

        template <class Derived>
        json write_diagonal(const Eigen::MatrixBase<Derived> &M)
        {
            json out = json::array();
            for (Eigen::Index i = 0; i < M.rows(); ++i)
                out.push_back(M(i, i));
            return out;
        }

        void check_psd(const ShapeMatrix &M, const std::string &key)
        {
            if (!M.allFinite() || (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M.cwiseAbs().maxCoeff()))
                throw ConfigError(key, "must be symmetric");
            if (!is_psd(M))
                throw ConfigError(key, "must be positive semidefinite");
        }

        int line_of(const std::string &text, std::size_t byte)
        {
            int line = 1;
            for (std::size_t i = 0; i < byte && i < text.size(); ++i)
                line += text[i] == '\n' ? 1 : 0;
            return line;
        }
    } // namespace

    void ScenarioConfig::validate() const
    {
        spec.validate();
        settings.validate();
        dd.validate();
        if (steps < 0)
            throw ConfigError("steps", "must be >= 0");
        if (runs < 1)
            throw ConfigError("runs", "must be >= 1");
        if (noise_window < 0)
            throw ConfigError("noise.window", "must be >= 0");
        if (!(delay >= 0.0) || delay > spec.disc.dt)
            throw ConfigError("controller.delay", "must lie in [0, dt]");
        if (scalar_rho && !(*scalar_rho >= 0.0 && *scalar_rho <= 1.0))
            throw ConfigError("scalar_tube.rho", "must lie in [0, 1]");
        check_psd(W, "noise.W");
        check_psd(sigma0, "sigma0");
        if ((spec.weights.Q.diagonal().array() < 0.0).any())
            throw ConfigError("weights.Q", "must be >= 0");
        if ((spec.weights.Q_e.diagonal().array() < 0.0).any())
            throw ConfigError("weights.Q_e", "must be >= 0");
        if ((spec.weights.R.diagonal().array() < 0.0).any())
            throw ConfigError("weights.R", "must be >= 0");
        if (oracle.max_iterations < 1)
            throw ConfigError("oracle.max_iterations", "must be >= 1");
        if (!(oracle.fd_step > 0.0))
            throw ConfigError("oracle.fd_step", "must be positive");
        if (reference.file.empty())
            parse_reference_kind(reference.kind);
    }

    ScenarioConfig scenario_from_json(const json &j)
    {
        ScenarioConfig cfg;
        ObjectReader root(j, "");
        root.get("name", cfg.name);
        root.get("seed", cfg.seed);
        root.get("steps", cfg.steps);
        root.get("runs", cfg.runs);
        root.get("N", cfg.spec.N);
        root.get("dt", cfg.spec.disc.dt);
        root.get("substeps", cfg.spec.disc.substeps);
        root.get("tau", cfg.dd.tau);
        root.get("robot_radius", cfg.spec.robot_radius);
        root.get("apply_accel_backoff", cfg.spec.apply_accel_backoff);

        if (const json *w = root.find("weights"))
        {
            ObjectReader r(*w, "weights");
            if (const json *v = r.find("Q"))
                cfg.spec.weights.Q = read_diagonal<kNs>(*v, "weights.Q");
            if (const json *v = r.find("R"))
                cfg.spec.weights.R = read_diagonal<kNu>(*v, "weights.R");
            if (const json *v = r.find("Q_e"))
                cfg.spec.weights.Q_e = read_diagonal<kNs>(*v, "weights.Q_e");
            r.finish();
        }

        if (const json *b = root.find("bounds"))
        {
            ObjectReader r(*b, "bounds");
            Bounds &bd = cfg.spec.bounds;
            r.get("v_min", bd.v_min);
            r.get("v_max", bd.v_max);
            r.get("omega_min", bd.omega_min);
            r.get("omega_max", bd.omega_max);
            r.get("a_min", bd.a_min);
            r.get("a_max", bd.a_max);
            r.get("alpha_min", bd.alpha_min);
            r.get("alpha_max", bd.alpha_max);
            r.finish();
        }

        if (const json *obs = root.find("obstacles"))
        {
            if (!obs->is_array())
                throw ConfigError("obstacles", "expected an array");
            for (std::size_t i = 0; i < obs->size(); ++i)
            {
                ObjectReader r((*obs)[i], "obstacles[" + std::to_string(i) + "]");
                Obstacle o;
                r.get("x", o.cx);
                r.get("y", o.cy);
                r.get("radius", o.radius);
                r.finish();
                cfg.spec.obstacles.push_back(o);
            }
        }

        if (const json *n = root.find("noise"))
        {
            ObjectReader r(*n, "noise");
            if (const json *v = r.find("W"))
                cfg.W = read_shape(*v, "noise.W");
            std::string mode = to_string(cfg.noise_mode);
            r.get("mode", mode);
            cfg.noise_mode = parse_noise_mode(mode);
            r.get("window", cfg.noise_window);
            r.finish();
        }
        if (const json *v = root.find("sigma0"))
            cfg.sigma0 = read_shape(*v, "sigma0");

        std::string plant = to_string(cfg.plant_mode);
        root.get("plant", plant);
        cfg.plant_mode = parse_plant_mode(plant);

        if (const json *ref = root.find("reference"))
        {
            ObjectReader r(*ref, "reference");
            ReferenceParams &p = cfg.reference.params;
            r.get("kind", cfg.reference.kind);
            r.get("file", cfg.reference.file);
            r.get("loop", cfg.reference.loop);
            r.get("speed", p.speed);
            r.get("duration", p.duration);
            r.get("x0", p.x0);
            r.get("y0", p.y0);
            r.get("heading", p.heading);
            r.get("radius", p.radius);
            r.get("counter_clockwise", p.counter_clockwise);
            r.get("lookahead", p.lookahead);
            r.get("ramp_time", p.ramp_time);
            if (const json *wp = r.find("waypoints"))
            {
                std::vector<std::array<double, 2>> pts;
                try
                {
                    pts = wp->get<std::vector<std::array<double, 2>>>();
                }
                catch (const json::exception &)
                {
                    throw ConfigError("reference.waypoints", "expected [[x, y], ...]");
                }
                for (const auto &pt : pts)
                    p.waypoints.emplace_back(pt[0], pt[1]);
            }
            r.finish();
        }

        if (const json *c = root.find("controller"))
        {
            ObjectReader r(*c, "controller");
            ZoroSettings &s = cfg.settings;
            r.get("qp_iterations_per_sample", s.qp_iterations_per_sample);
            r.get("backoff_updates_per_sample", s.backoff_updates_per_sample);
            r.get("max_outer_iterations", s.max_outer_iterations);
            r.get("max_inner_iterations", s.max_inner_iterations);
            r.get("tol_stationarity", s.tol_stationarity);
            r.get("tol_feasibility", s.tol_feasibility);
            r.get("levenberg", s.levenberg);
            r.get("slack_penalty_l1", s.slack_penalty_l1);
            r.get("slack_penalty_l2", s.slack_penalty_l2);
            r.get("qp_max_iterations", s.qp_max_iterations);
            r.get("solve_to_convergence", cfg.solve_to_convergence);
            r.get("delay", cfg.delay);
            r.finish();
        }

        if (const json *o = root.find("oracle"))
        {
            ObjectReader r(*o, "oracle");
            r.get("max_iterations", cfg.oracle.max_iterations);
            r.get("tol_step", cfg.oracle.tol_step);
            r.get("tol_stationarity", cfg.oracle.tol_stationarity);
            r.get("fd_step", cfg.oracle.fd_step);
            r.finish();
        }

        if (const json *st = root.find("scalar_tube"))
        {
            ObjectReader r(*st, "scalar_tube");
            double rho = 0.0;
            if (r.find("rho"))
            {
                r.get("rho", rho);
                cfg.scalar_rho = rho;
            }
            r.finish();
        }

        if (const json *s0 = root.find("initial_state"))
        {
            std::vector<double> v;
            try
            {
                v = s0->get<std::vector<double>>();
            }
            catch (const json::exception &)
            {
                throw ConfigError("initial_state", "expected 5 numbers");
            }
            if (v.size() != static_cast<std::size_t>(kNs))
                throw ConfigError("initial_state", "expected 5 numbers");
            cfg.initial_state = make_state(v[0], v[1], v[2], v[3], v[4]);
        }

        root.finish();
        cfg.validate();
        return cfg;
    }

    json to_json(const ScenarioConfig &cfg)
    {
        const OcpSpec &sp = cfg.spec;
        json j;
        j["name"] = cfg.name;
        j["seed"] = cfg.seed;
        j["steps"] = cfg.steps;
        j["runs"] = cfg.runs;
        j["N"] = sp.N;
        j["dt"] = sp.disc.dt;
        j["substeps"] = sp.disc.substeps;
        j["tau"] = cfg.dd.tau;
        j["robot_radius"] = sp.robot_radius;
        j["apply_accel_backoff"] = sp.apply_accel_backoff;
        j["weights"] = {{"Q", write_diagonal(sp.weights.Q)},
                        {"R", write_diagonal(sp.weights.R)},
                        {"Q_e", write_diagonal(sp.weights.Q_e)}};
        const Bounds &b = sp.bounds;
        j["bounds"] = {{"v_min", b.v_min},         {"v_max", b.v_max},         {"omega_min", b.omega_min},
                       {"omega_max", b.omega_max}, {"a_min", b.a_min},         {"a_max", b.a_max},
                       {"alpha_min", b.alpha_min}, {"alpha_max", b.alpha_max}};
        j["obstacles"] = json::array();
        for (const Obstacle &o : sp.obstacles)
            j["obstacles"].push_back({{"x", o.cx}, {"y", o.cy}, {"radius", o.radius}});
        j["noise"] = {{"W", write_shape(cfg.W)}, {"mode", to_string(cfg.noise_mode)}, {"window", cfg.noise_window}};
        j["sigma0"] = write_shape(cfg.sigma0);
        j["plant"] = to_string(cfg.plant_mode);

        const ReferenceParams &p = cfg.reference.params;
        json ref = {{"kind", cfg.reference.kind},
                    {"file", cfg.reference.file},
                    {"loop", cfg.reference.loop},
                    {"speed", p.speed},
                    {"duration", p.duration},
                    {"x0", p.x0},
                    {"y0", p.y0},
                    {"heading", p.heading},
                    {"radius", p.radius},
                    {"counter_clockwise", p.counter_clockwise},
                    {"lookahead", p.lookahead},
                    {"ramp_time", p.ramp_time}};
        ref["waypoints"] = json::array();
        for (const Eigen::Vector2d &w : p.waypoints)
            ref["waypoints"].push_back({w.x(), w.y()});
        j["reference"] = ref;

        const ZoroSettings &s = cfg.settings;
        j["controller"] = {{"qp_iterations_per_sample", s.qp_iterations_per_sample},
                           {"backoff_updates_per_sample", s.backoff_updates_per_sample},
                           {"max_outer_iterations", s.max_outer_iterations},
                           {"max_inner_iterations", s.max_inner_iterations},
                           {"tol_stationarity", s.tol_stationarity},
                           {"tol_feasibility", s.tol_feasibility},
                           {"levenberg", s.levenberg},
                           {"slack_penalty_l1", s.slack_penalty_l1},
                           {"slack_penalty_l2", s.slack_penalty_l2},
                           {"qp_max_iterations", s.qp_max_iterations},
                           {"solve_to_convergence", cfg.solve_to_convergence},
                           {"delay", cfg.delay}};
        j["oracle"] = {{"max_iterations", cfg.oracle.max_iterations},
                       {"tol_step", cfg.oracle.tol_step},
                       {"tol_stationarity", cfg.oracle.tol_stationarity},
                       {"fd_step", cfg.oracle.fd_step}};
        j["scalar_tube"] = {{"rho", cfg.scalar_rho ? json(*cfg.scalar_rho) : json(nullptr)}};
        if (cfg.initial_state)
            j["initial_state"] = std::vector<double>(cfg.initial_state->data(), cfg.initial_state->data() + kNs);
        else
            j["initial_state"] = nullptr;
        return j;
    }

    ScenarioConfig parse_scenario(const std::string &text, const std::string &base_dir)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError("<json>", "parse error at line " + std::to_string(line_of(text, e.byte)) + ": " +
                                            e.what());
        }
        ScenarioConfig cfg = scenario_from_json(j);
        if (!cfg.reference.file.empty())
        {
            const std::filesystem::path file(cfg.reference.file);
            if (file.is_relative())
                cfg.reference.file = (std::filesystem::path(base_dir) / file).lexically_normal().string();
        }
        return cfg;
    }

    ScenarioConfig load_scenario(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("<file>", "cannot open " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse_scenario(buf.str(), std::filesystem::path(path).parent_path().string());
    }

    ReferenceTrajectory load_reference_csv(const std::string &path, double dt, bool loop)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("reference.file", "cannot open " + path);
        ReferenceTrajectory ref;
        ref.dt = dt;
        ref.loop = loop;
        std::string line;
        int row = 0;
        while (std::getline(in, line))
        {
            ++row;
            if (line.empty() || line[0] == '#' || (row == 1 && line.find_first_of("0123456789") != 0 && line[0] != '-'))
                continue;
            std::stringstream ss(line);
            std::array<double, kNs + kNu> v{};
            for (double &x : v)
            {
                std::string cell;
                if (!std::getline(ss, cell, ','))
                    throw ConfigError("reference.file", "line " + std::to_string(row) + ": expected 7 columns");
                try
                {
                    x = std::stod(cell);
                }
                catch (const std::exception &)
                {
                    throw ConfigError("reference.file", "line " + std::to_string(row) + ": not a number");
                }
            }
            ref.states.push_back(make_state(v[0], v[1], v[2], v[3], v[4]));
            ref.inputs.push_back(make_input(v[5], v[6]));
        }
        if (ref.states.size() < 2)
            throw ConfigError("reference.file", "need at least 2 samples");
        ref.inputs.pop_back();
        return ref;
    }

    ScalarTube matched_scalar_tube(const ShapeMatrix &W, const ShapeMatrix &sigma0, double rho)
    {
        Eigen::SelfAdjointEigenSolver<ShapeMatrix> ew(W), es(sigma0);
        ScalarTube st;
        st.eps_step = std::sqrt(std::max(0.0, ew.eigenvalues().maxCoeff()));
        st.eps0 = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
        st.rho = rho;
        return st;
    }

    SimScenario build_scenario(const ScenarioConfig &cfg)
    {
        cfg.validate();
        SimScenario sc;
        sc.name = cfg.name;
        sc.spec = cfg.spec;
        sc.reference = cfg.reference.file.empty()
                           ? generate_reference(parse_reference_kind(cfg.reference.kind), cfg.reference.params,
                                                cfg.spec.disc, cfg.spec.bounds)
                           : load_reference_csv(cfg.reference.file, cfg.spec.disc.dt, cfg.reference.loop);
        sc.robust.kind = TubeKind::kEllipsoidal;
        sc.robust.K = feedback_gain(cfg.dd, cfg.spec.disc);
        sc.robust.W.W = cfg.W;
        sc.robust.sigma0 = cfg.sigma0;
        sc.scalar = matched_scalar_tube(cfg.W, cfg.sigma0,
                                        cfg.scalar_rho.value_or(std::exp(-cfg.spec.disc.dt / cfg.dd.tau)));
        sc.plant.mode = cfg.plant_mode;
        sc.plant.dd = cfg.dd;
        sc.plant.noise.W = cfg.W;
        sc.plant.noise_mode = cfg.noise_mode;
        sc.plant.noise_window = cfg.noise_window;
        sc.settings = cfg.settings;
        sc.oracle = cfg.oracle;
        sc.delay = cfg.delay;
        sc.initial_state = cfg.initial_state;
        sc.steps = cfg.steps;
        sc.solve_to_convergence = cfg.solve_to_convergence;
        sc.seed = cfg.seed;
        return sc;
    }

} // namespace zoro

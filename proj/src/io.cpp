#include "csiloc/io.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csiloc/errors.hpp"

namespace csiloc {

namespace {

class Writer {
public:
    void u32(uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        buf_.append(b, 4);
    }
    void u64(uint64_t v) {
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        buf_.append(b, 8);
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u32(bits);
    }
    void magic(const char (&m)[5]) { buf_.append(m, 4); }
    void tensor(const Tensor& t) {
        u32(static_cast<uint32_t>(t.ndim()));
        for (int d : t.shape) u32(static_cast<uint32_t>(d));
        for (double v : t.data) f64(v);
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string bytes, std::string what) : buf_(std::move(bytes)), what_(std::move(what)) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    float f32() {
        const uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    void expect_magic(const char (&m)[5]) {
        need(4);
        if (std::memcmp(buf_.data() + pos_, m, 4) != 0)
            throw bad_magic_error(what_ + ": bad magic, expected " + std::string(m, 4));
        pos_ += 4;
    }
    void expect_version(uint32_t v) {
        const uint32_t got = u32();
        if (got != v)
            throw bad_version_error(what_ + ": unsupported version " + std::to_string(got));
    }
    Tensor tensor() {
        const uint32_t nd = u32();
        if (nd > 8) throw io_error(what_ + ": implausible tensor rank");
        std::vector<int> shape(nd);
        for (auto& d : shape) d = static_cast<int>(u32());
        Tensor t(shape);
        for (auto& v : t.data) v = f64();
        return t;
    }
    void done() {
        if (pos_ != buf_.size()) throw io_error(what_ + ": trailing bytes");
    }

private:
    void need(size_t n) {
        if (pos_ + n > buf_.size())
            throw truncated_file_error(what_ + ": file truncated at byte " + std::to_string(pos_));
    }
    std::string buf_;
    size_t pos_ = 0;
    std::string what_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void atomic_write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw io_error("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void save_environment(const std::string& path, const Environment& env) {
    Writer w;
    w.magic("ENV1");
    w.u32(1);
    w.u32(static_cast<uint32_t>(env.config.num_antennas));
    w.u32(static_cast<uint32_t>(env.config.num_subcarriers));
    w.f64(env.config.center_wavelength);
    w.f64(env.config.antenna_spacing);
    w.u32(static_cast<uint32_t>(env.config.num_paths));
    w.f64(env.config.noise_std);
    for (double f : env.config.subcarrier_freqs) w.f64(f);
    w.f64(env.bounds.xmin);
    w.f64(env.bounds.ymin);
    w.f64(env.bounds.xmax);
    w.f64(env.bounds.ymax);
    w.f64(env.bs_pos.x);
    w.f64(env.bs_pos.y);
    w.f64(env.array_axis.x);
    w.f64(env.array_axis.y);
    w.u32(static_cast<uint32_t>(env.scatterers.size()));
    for (const Vec2& s : env.scatterers) {
        w.f64(s.x);
        w.f64(s.y);
    }
    w.u64(env.seed);
    atomic_write_file(path, w.bytes());
}

Environment load_environment(const std::string& path) {
    Reader r(read_file(path), path);
    r.expect_magic("ENV1");
    r.expect_version(1);
    Environment env;
    env.config.num_antennas = static_cast<int>(r.u32());
    env.config.num_subcarriers = static_cast<int>(r.u32());
    env.config.center_wavelength = r.f64();
    env.config.antenna_spacing = r.f64();
    env.config.num_paths = static_cast<int>(r.u32());
    env.config.noise_std = r.f64();
    env.config.subcarrier_freqs.resize(static_cast<size_t>(env.config.num_subcarriers));
    for (auto& f : env.config.subcarrier_freqs) f = r.f64();
    env.bounds.xmin = r.f64();
    env.bounds.ymin = r.f64();
    env.bounds.xmax = r.f64();
    env.bounds.ymax = r.f64();
    env.bs_pos.x = r.f64();
    env.bs_pos.y = r.f64();
    env.array_axis.x = r.f64();
    env.array_axis.y = r.f64();
    env.scatterers.resize(r.u32());
    for (auto& s : env.scatterers) {
        s.x = r.f64();
        s.y = r.f64();
    }
    env.seed = r.u64();
    r.done();
    return env;
}

void save_csi_dataset(const std::string& path, const std::vector<CsiSample>& samples, int A,
                      int S) {
    Writer w;
    w.magic("CSI1");
    w.u32(static_cast<uint32_t>(A));
    w.u32(static_cast<uint32_t>(S));
    w.u32(static_cast<uint32_t>(samples.size()));
    for (const CsiSample& s : samples) {
        if (s.csi.ndim() != 3 || s.csi.dim(0) != A || s.csi.dim(1) != S || s.csi.dim(2) != 2)
            throw std::invalid_argument("save_csi_dataset: sample shape mismatch");
        w.f64(s.pos.x);
        w.f64(s.pos.y);
        for (double v : s.csi.data) w.f32(static_cast<float>(v));
    }
    atomic_write_file(path, w.bytes());
}

std::vector<CsiSample> load_csi_dataset(const std::string& path, int* A_out, int* S_out) {
    Reader r(read_file(path), path);
    r.expect_magic("CSI1");
    const int A = static_cast<int>(r.u32());
    const int S = static_cast<int>(r.u32());
    const uint32_t count = r.u32();
    std::vector<CsiSample> out(count);
    for (auto& s : out) {
        s.pos.x = r.f64();
        s.pos.y = r.f64();
        s.csi = Tensor({A, S, 2});
        for (auto& v : s.csi.data) v = static_cast<double>(r.f32());
    }
    r.done();
    if (A_out) *A_out = A;
    if (S_out) *S_out = S;
    return out;
}

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw std::invalid_argument("save_trajectories: empty set");
    const int T = trajs.front().length();
    Writer w;
    w.magic("TRJ1");
    w.u32(static_cast<uint32_t>(T));
    w.u32(static_cast<uint32_t>(trajs.size()));
    for (const Trajectory& t : trajs) {
        if (t.length() != T)
            throw std::invalid_argument("save_trajectories: inconsistent lengths");
        for (const Vec2& p : t.points) {
            w.f64(p.x);
            w.f64(p.y);
        }
    }
    atomic_write_file(path, w.bytes());
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
    Reader r(read_file(path), path);
    r.expect_magic("TRJ1");
    const int T = static_cast<int>(r.u32());
    const uint32_t count = r.u32();
    std::vector<Trajectory> out(count);
    for (auto& t : out) {
        t.points.resize(static_cast<size_t>(T));
        for (auto& p : t.points) {
            p.x = r.f64();
            p.y = r.f64();
        }
    }
    r.done();
    return out;
}

void save_imu(const std::string& path, const std::vector<ImuMeasurement>& measurements,
              int traj_len) {
    Writer w;
    w.magic("IMU1");
    w.u32(static_cast<uint32_t>(traj_len));
    w.u32(static_cast<uint32_t>(measurements.size()));
    for (const ImuMeasurement& m : measurements) {
        if (static_cast<int>(m.steps.size()) != traj_len - 1)
            throw std::invalid_argument("save_imu: step count must be T - 1");
        w.f64(m.snr_db);
        for (const ImuStep& s : m.steps) {
            w.f64(s.distance);
            w.f64(s.heading);
        }
    }
    atomic_write_file(path, w.bytes());
}

std::vector<ImuMeasurement> load_imu(const std::string& path, int* traj_len) {
    Reader r(read_file(path), path);
    r.expect_magic("IMU1");
    const int T = static_cast<int>(r.u32());
    const uint32_t count = r.u32();
    std::vector<ImuMeasurement> out(count);
    for (auto& m : out) {
        m.snr_db = r.f64();
        m.steps.resize(static_cast<size_t>(T - 1));
        for (auto& s : m.steps) {
            s.distance = r.f64();
            s.heading = r.f64();
        }
    }
    r.done();
    if (traj_len) *traj_len = T;
    return out;
}

namespace {

void write_network_config(Writer& w, const NetworkConfig& c) {
    w.u32(static_cast<uint32_t>(c.input_h));
    w.u32(static_cast<uint32_t>(c.input_w));
    w.u32(static_cast<uint32_t>(c.input_c));
    w.u32(static_cast<uint32_t>(c.channels));
    w.u32(static_cast<uint32_t>(c.kernel));
    w.u32(static_cast<uint32_t>(c.stages));
    w.u32(static_cast<uint32_t>(c.deep_blocks));
    w.u32(static_cast<uint32_t>(c.aarb_period));
    w.u32(static_cast<uint32_t>(c.attn_qk));
    w.u32(static_cast<uint32_t>(c.attn_v));
    w.u32(static_cast<uint32_t>(c.fcn1));
    w.u32(static_cast<uint32_t>(c.fcn2));
    w.u32(static_cast<uint32_t>(c.pool_h));
    w.u32(static_cast<uint32_t>(c.pool_w));
    w.u32(c.use_attention ? 1u : 0u);
    w.u32(c.use_pooling_blocks ? 1u : 0u);
}

NetworkConfig read_network_config(Reader& r) {
    NetworkConfig c;
    c.input_h = static_cast<int>(r.u32());
    c.input_w = static_cast<int>(r.u32());
    c.input_c = static_cast<int>(r.u32());
    c.channels = static_cast<int>(r.u32());
    c.kernel = static_cast<int>(r.u32());
    c.stages = static_cast<int>(r.u32());
    c.deep_blocks = static_cast<int>(r.u32());
    c.aarb_period = static_cast<int>(r.u32());
    c.attn_qk = static_cast<int>(r.u32());
    c.attn_v = static_cast<int>(r.u32());
    c.fcn1 = static_cast<int>(r.u32());
    c.fcn2 = static_cast<int>(r.u32());
    c.pool_h = static_cast<int>(r.u32());
    c.pool_w = static_cast<int>(r.u32());
    c.use_attention = r.u32() != 0;
    c.use_pooling_blocks = r.u32() != 0;
    return c;
}

void write_model_body(Writer& w, const PositionModel& model) {
    write_network_config(w, model.config);
    w.u32(static_cast<uint32_t>(model.meta.epochs_run));
    w.f64(model.meta.best_val_mse);
    const auto params = model.all_params();
    w.u32(static_cast<uint32_t>(params.size()));
    for (const Parameter* p : params) w.tensor(p->value);
}

PositionModel read_model_body(Reader& r) {
    const NetworkConfig cfg = read_network_config(r);
    // rebuild the structure, then overwrite every tensor
    PositionModel model = init_position_model(cfg, 0);
    model.meta.epochs_run = static_cast<int>(r.u32());
    model.meta.best_val_mse = r.f64();
    const uint32_t count = r.u32();
    auto params = model.all_params();
    if (count != params.size()) throw io_error("model: parameter count mismatch");
    for (Parameter* p : params) {
        Tensor t = r.tensor();
        if (!t.same_shape(p->value)) throw io_error("model: tensor shape mismatch for " + p->name);
        p->value = std::move(t);
    }
    return model;
}

}  // namespace

void save_model(const std::string& path, const PositionModel& model) {
    Writer w;
    w.magic("PNM1");
    w.u32(1);
    write_model_body(w, model);
    atomic_write_file(path, w.bytes());
}

PositionModel load_model(const std::string& path) {
    Reader r(read_file(path), path);
    r.expect_magic("PNM1");
    r.expect_version(1);
    PositionModel m = read_model_body(r);
    r.done();
    return m;
}

void save_checkpoint(const std::string& path, const TrainState& state) {
    Writer w;
    w.magic("PNC1");
    w.u32(1);
    write_model_body(w, state.model);
    write_model_body(w, state.best_model);
    w.u32(static_cast<uint32_t>(state.next_epoch));
    w.f64(state.best_val);
    w.u64(static_cast<uint64_t>(state.adam.step));
    w.f64(state.adam.base_lr);
    w.u32(static_cast<uint32_t>(state.adam.halve_every));
    w.u32(static_cast<uint32_t>(state.adam.m.size()));
    for (const Tensor& t : state.adam.m) w.tensor(t);
    for (const Tensor& t : state.adam.v) w.tensor(t);
    atomic_write_file(path, w.bytes());
}

TrainState load_checkpoint(const std::string& path) {
    Reader r(read_file(path), path);
    r.expect_magic("PNC1");
    r.expect_version(1);
    TrainState st;
    st.model = read_model_body(r);
    st.best_model = read_model_body(r);
    st.next_epoch = static_cast<int>(r.u32());
    st.best_val = r.f64();
    st.adam.step = static_cast<int64_t>(r.u64());
    st.adam.base_lr = r.f64();
    st.adam.halve_every = static_cast<int>(r.u32());
    const uint32_t count = r.u32();
    st.adam.m.resize(count);
    for (auto& t : st.adam.m) t = r.tensor();
    st.adam.v.resize(count);
    for (auto& t : st.adam.v) t = r.tensor();
    r.done();
    return st;
}

void save_bank(const std::string& path, const DenoiserBank& bank) {
    Writer w;
    w.magic("DNB1");
    w.u32(1);
    w.u32(static_cast<uint32_t>(bank.models.size()));
    for (const DenoiserModel& m : bank.models) {
        w.u32(static_cast<uint32_t>(m.traj_len));
        w.f64(m.noise_level);
        for (const Parameter* p : m.all_params()) w.tensor(p->value);
    }
    atomic_write_file(path, w.bytes());
}

DenoiserBank load_bank(const std::string& path) {
    Reader r(read_file(path), path);
    r.expect_magic("DNB1");
    r.expect_version(1);
    DenoiserBank bank;
    bank.models.resize(r.u32());
    for (DenoiserModel& m : bank.models) {
        m.traj_len = static_cast<int>(r.u32());
        m.noise_level = r.f64();
        for (Parameter* p : m.all_params()) p->value = r.tensor();
        m.w1.name = "w1";
        m.b1.name = "b1";
        m.w2.name = "w2";
        m.b2.name = "b2";
        m.w3.name = "w3";
        m.b3.name = "b3";
    }
    r.done();
    return bank;
}

}  // namespace csiloc

#include "scfc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace scfc {

namespace {

constexpr char kStackMagic[8] = {'S', 'C', 'F', 'C', 'S', 'T', 'K', '1'};

void write_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) throw ScfcError(ErrorCode::IoFailure, "checkpoint write failed");
}

void read_bytes(std::istream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
        throw ScfcError(ErrorCode::TruncatedFile, "checkpoint ends early");
}

void write_u32(std::ostream& out, std::uint32_t v) { write_bytes(out, &v, 4); }
void write_u64(std::ostream& out, std::uint64_t v) { write_bytes(out, &v, 8); }
void write_f64(std::ostream& out, double v) { write_bytes(out, &v, 8); }

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v;
    read_bytes(in, &v, 4);
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v;
    read_bytes(in, &v, 8);
    return v;
}
double read_f64(std::istream& in) {
    double v;
    read_bytes(in, &v, 8);
    return v;
}

std::unique_ptr<Layer> make_layer(LayerKind kind, std::istream& in) {
    switch (kind) {
        case LayerKind::Conv2d: {
            const auto ic = read_u32(in), oc = read_u32(in), k = read_u32(in), s = read_u32(in);
            return std::make_unique<Conv2d>(ic, oc, k, s);
        }
        case LayerKind::Dense: {
            const auto fi = read_u32(in), fo = read_u32(in);
            return std::make_unique<Dense>(fi, fo);
        }
        case LayerKind::Relu: return std::make_unique<Relu>();
        case LayerKind::MaxPool2x2: return std::make_unique<MaxPool2x2>();
        case LayerKind::Flatten: return std::make_unique<Flatten>();
        case LayerKind::Sigmoid: return std::make_unique<Sigmoid>();
    }
    throw ScfcError(ErrorCode::BadFormat, "unknown layer kind in checkpoint");
}

void write_layer_desc(std::ostream& out, const Layer& layer) {
    const auto kind = static_cast<std::uint8_t>(layer.kind());
    write_bytes(out, &kind, 1);
    if (const auto* conv = dynamic_cast<const Conv2d*>(&layer)) {
        write_u32(out, static_cast<std::uint32_t>(conv->in_channels()));
        write_u32(out, static_cast<std::uint32_t>(conv->out_channels()));
        write_u32(out, static_cast<std::uint32_t>(conv->ksize()));
        write_u32(out, static_cast<std::uint32_t>(conv->stride()));
    } else if (const auto* dense = dynamic_cast<const Dense*>(&layer)) {
        write_u32(out, static_cast<std::uint32_t>(dense->in_features()));
        write_u32(out, static_cast<std::uint32_t>(dense->out_features()));
    }
}

}  // namespace

void save_stack(std::ostream& out, LayerStack& stack, const SgdConfig& cfg) {
    write_bytes(out, kStackMagic, sizeof(kStackMagic));
    write_u32(out, static_cast<std::uint32_t>(stack.input_shape().size()));
    for (std::size_t d : stack.input_shape()) write_u32(out, static_cast<std::uint32_t>(d));
    write_u32(out, static_cast<std::uint32_t>(stack.layer_count()));
    for (std::size_t i = 0; i < stack.layer_count(); ++i) write_layer_desc(out, stack.layer(i));

    write_f64(out, cfg.learning_rate);
    write_u64(out, cfg.minibatch_size);
    write_f64(out, cfg.l2_lambda);
    write_u64(out, cfg.seed);

    for (const auto& group : stack.params()) {
        write_u64(out, group.value->size());
        write_bytes(out, group.value->data.data(), group.value->size() * sizeof(double));
    }
}

void load_stack(std::istream& in, LayerStack& stack, SgdConfig& cfg) {
    char magic[8];
    read_bytes(in, magic, sizeof(magic));
    if (std::memcmp(magic, kStackMagic, sizeof(magic)) != 0)
        throw ScfcError(ErrorCode::BadMagic, "not a stack checkpoint");

    LayerStack loaded;
    const std::uint32_t rank = read_u32(in);
    std::vector<std::size_t> input_shape(rank);
    for (auto& d : input_shape) d = read_u32(in);
    loaded.set_input_shape(std::move(input_shape));

    const std::uint32_t layer_count = read_u32(in);
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        std::uint8_t kind;
        read_bytes(in, &kind, 1);
        loaded.add(make_layer(static_cast<LayerKind>(kind), in));
    }

    cfg.learning_rate = read_f64(in);
    cfg.minibatch_size = static_cast<std::size_t>(read_u64(in));
    cfg.l2_lambda = read_f64(in);
    cfg.seed = read_u64(in);

    for (auto& group : loaded.params()) {
        const std::uint64_t count = read_u64(in);
        if (count != group.value->size())
            throw ScfcError(ErrorCode::ShapeMismatch,
                            "checkpoint tensor size mismatch in " + group.name);
        read_bytes(in, group.value->data.data(), count * sizeof(double));
    }
    stack = std::move(loaded);
}

void save_stack_file(const std::string& path, LayerStack& stack, const SgdConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    save_stack(out, stack, cfg);
}

void load_stack_file(const std::string& path, LayerStack& stack, SgdConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path);
    load_stack(in, stack, cfg);
}

}  // namespace scfc

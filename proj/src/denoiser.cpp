#include "dal/denoiser.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace dal {

using nlohmann::json;

DenoiserModel::DenoiserModel(const Meta& meta, std::uint64_t init_seed) : meta_(meta) {
    Rng rng(derive_seed(init_seed, fnv1a("unet-init")));
    net_ = std::make_unique<nn::UNet<float>>(meta.arch, rng);
}

Tensor DenoiserModel::predict(const Tensor& x_t, const std::vector<int>& t) {
    return net_->forward(x_t, t, /*save=*/false);
}

std::uint64_t DenoiserModel::weights_hash() const {
    std::uint64_t h = fnv1a("denoiser-weights");
    auto params = const_cast<nn::UNet<float>&>(*net_).params();
    for (const auto& p : params) h = fnv1a(p.w->data(), p.w->size() * sizeof(float), h);
    return h;
}

std::unique_ptr<DenoiserModel> DenoiserModel::clone() const {
    auto copy = std::make_unique<DenoiserModel>(meta_, 0);
    auto src = const_cast<nn::UNet<float>&>(*net_).params();
    auto dst = copy->net_->params();
    require(src.size() == dst.size(), "DenoiserModel::clone: parameter mismatch");
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i].w = *src[i].w;
    return copy;
}

namespace {

json arch_to_json(const ArchConfig& a) {
    return json{{"levels", a.levels},
                {"base_channels", a.base_channels},
                {"blocks_per_level", a.blocks_per_level},
                {"time_embed_dim", a.time_embed_dim}};
}

ArchConfig arch_from_json(const json& j) {
    ArchConfig a;
    a.levels = j.at("levels").get<int>();
    a.base_channels = j.at("base_channels").get<int>();
    a.blocks_per_level = j.at("blocks_per_level").get<int>();
    a.time_embed_dim = j.at("time_embed_dim").get<int>();
    return a;
}

constexpr char kMagic[] = "DALCKPT1\n";

}  // namespace

void DenoiserModel::save(const std::string& path) const {
    auto params = const_cast<nn::UNet<float>&>(*net_).params();
    json manifest;
    manifest["arch"] = arch_to_json(meta_.arch);
    manifest["schedule"] = {{"T", meta_.schedule_T},
                            {"beta1", meta_.schedule_beta1},
                            {"betaT", meta_.schedule_betaT}};
    manifest["train_seed"] = meta_.train_seed;
    manifest["dataset_hash"] = meta_.dataset_hash;
    json plist = json::array();
    for (const auto& p : params) plist.push_back({{"name", p.name}, {"count", p.w->size()}});
    manifest["params"] = plist;

    std::ofstream out(path, std::ios::binary);
    require(out.good(), "DenoiserModel::save: cannot open " + path);
    const std::string header = manifest.dump(2);
    out.write(kMagic, sizeof(kMagic) - 1);
    const std::uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& p : params) {
        out.write(reinterpret_cast<const char*>(p.w->data()),
                  static_cast<std::streamsize>(p.w->size() * sizeof(float)));
    }
    require(out.good(), "DenoiserModel::save: write failed for " + path);
}

std::unique_ptr<DenoiserModel> DenoiserModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "DenoiserModel::load: cannot open " + path);
    char magic[sizeof(kMagic) - 1];
    in.read(magic, sizeof(magic));
    require(in.good() && std::memcmp(magic, kMagic, sizeof(magic)) == 0,
            "DenoiserModel::load: bad magic in " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    require(in.good(), "DenoiserModel::load: truncated manifest in " + path);
    const json manifest = json::parse(header);

    Meta meta;
    meta.arch = arch_from_json(manifest.at("arch"));
    meta.schedule_T = manifest.at("schedule").at("T").get<int>();
    meta.schedule_beta1 = manifest.at("schedule").at("beta1").get<double>();
    meta.schedule_betaT = manifest.at("schedule").at("betaT").get<double>();
    meta.train_seed = manifest.at("train_seed").get<std::uint64_t>();
    meta.dataset_hash = manifest.at("dataset_hash").get<std::uint64_t>();

    auto model = std::make_unique<DenoiserModel>(meta, 0);
    auto params = model->net_->params();
    const json& plist = manifest.at("params");
    require(plist.size() == params.size(), "DenoiserModel::load: parameter list mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(plist[i].at("name").get<std::string>() == params[i].name,
                "DenoiserModel::load: parameter name mismatch at index " + std::to_string(i));
        const std::size_t count = plist[i].at("count").get<std::size_t>();
        require(count == params[i].w->size(), "DenoiserModel::load: parameter size mismatch");
        in.read(reinterpret_cast<char*>(params[i].w->data()),
                static_cast<std::streamsize>(count * sizeof(float)));
    }
    require(in.good(), "DenoiserModel::load: truncated weights in " + path);
    return model;
}

}  // namespace dal

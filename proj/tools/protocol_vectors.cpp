// Writes the reference request/response byte streams for the denoiser wire
// protocol. Servers are expected to answer each request_*.bin with the
// matching response_*.bin when running the zero model (eps = 0).
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "nsmi/protocol.hpp"

namespace proto = nsmi::protocol;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: nsmi_protocol_vectors OUTPUT_DIR\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::array();

    proto::Request plain;
    plain.t = 7;
    plain.height = 2;
    plain.width = 3;
    plain.x_t = {0.5f, -1.0f, 2.0f, 0.25f, 0.0f, 3.75f};
    write_bytes(dir / "request_unconditional.bin", proto::encode_request(plain));
    write_bytes(dir / "response_unconditional.bin",
                proto::encode_response({true, std::vector<float>(6, 0.0f), {}}));
    manifest.push_back({{"request", "request_unconditional.bin"},
                        {"response", "response_unconditional.bin"},
                        {"t", 7}, {"shape", {2, 3}}, {"n_channels", 1}});

    proto::Request cond;
    cond.t = 1999;
    cond.height = 2;
    cond.width = 2;
    cond.x_t = {1.0f, -0.5f, 0.125f, -2.0f};
    cond.condition = std::vector<float>{0.0f, 0.25f, 0.5f, 1.0f};
    write_bytes(dir / "request_conditional.bin", proto::encode_request(cond));
    write_bytes(dir / "response_conditional.bin",
                proto::encode_response({true, std::vector<float>(4, 0.0f), {}}));
    manifest.push_back({{"request", "request_conditional.bin"},
                        {"response", "response_conditional.bin"},
                        {"t", 1999}, {"shape", {2, 2}}, {"n_channels", 2}});

    write_bytes(dir / "response_error.bin", proto::encode_response({false, {}, "example failure"}));
    manifest.push_back({{"response", "response_error.bin"}, {"status", 1}, {"message", "example failure"}});

    std::vector<std::uint8_t> bad = proto::encode_request(plain);
    bad[0] = 'X';
    write_bytes(dir / "request_bad_magic.bin", bad);
    manifest.push_back({{"request", "request_bad_magic.bin"},
                        {"expect", "status 1 response; message text is free-form"}});

    std::ofstream(dir / "vectors.json") << manifest.dump(2) << '\n';
    std::cout << "wrote " << manifest.size() << " vectors to " << dir.string() << '\n';
    return 0;
}

// Line-protocol test peer. Usage: echo_oracle <mode>
//   fixed     reply [0.1,0.2,0.7] to every request
//   brightness two classes, p1 = mean pixel / 255
//   mismatch  reply with id + 1
//   error     reply with an error object
//   die       exit without replying
//   truncate  write half a reply line, then exit
//   garbage   reply with a non-JSON line
#include <iostream>
#include <string>
#include <vector>

#include "pica/wire.hpp"

int main(int argc, char** argv) {
    const std::string mode = argc > 1 ? argv[1] : "fixed";
    std::string line;
    while (std::getline(std::cin, line)) {
        if (mode == "die") return 3;
        std::uint64_t id = 0;
        std::vector<double> probs{0.1, 0.2, 0.7};
        try {
            const auto req = pica::wire::decode_request(line);
            id = req.id;
            if (mode == "brightness") {
                double sum = 0.0;
                for (auto v : req.image.data()) sum += v;
                const double p1 = sum / (255.0 * static_cast<double>(req.image.data().size()));
                probs = {1.0 - p1, p1};
            }
        } catch (const std::exception& e) {
            std::cout << pica::wire::encode_error_reply(0, e.what()) << std::endl;
            continue;
        }
        if (mode == "mismatch") {
            std::cout << pica::wire::encode_reply(id + 1, probs) << std::endl;
        } else if (mode == "error") {
            std::cout << pica::wire::encode_error_reply(id, "model not loaded") << std::endl;
        } else if (mode == "truncate") {
            const auto reply = pica::wire::encode_reply(id, probs);
            std::cout << reply.substr(0, reply.size() / 2) << std::flush;
            return 0;
        } else if (mode == "garbage") {
            std::cout << "hello" << std::endl;
        } else {
            std::cout << pica::wire::encode_reply(id, probs) << std::endl;
        }
    }
    return 0;
}

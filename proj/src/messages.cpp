#include "paris/messages.hpp"

namespace paris {

std::string to_string(const Address& a) {
  return std::string(a.is_server() ? "server(" : "client(") + std::to_string(a.dc) + "," + std::to_string(a.index) +
         ")";
}

const char* message_name(const Message& m) {
  static constexpr const char* kNames[] = {
      "StartTxReq",  "StartTxResp",     "ReadReq",   "ReadResp",   "ReadSliceReq", "ReadSliceResp", "PrepareReq",
      "PrepareResp", "CommitReqClient", "CommitReqCohort", "CommitResp", "Replicate", "Heartbeat",     "GsvUp",
      "GsvDown",     "RootExchange",    "SOldUp",    "SOldDown",   "ErrorResp"};
  static_assert(std::size(kNames) == std::variant_size_v<Message>);
  return kNames[m.index()];
}

}  // namespace paris

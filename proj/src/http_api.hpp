#pragma once

#include <string>

namespace httplib {
class Server;
}

namespace shapefit {

class IsiService;

/// Registers the session routes on `server`. Errors answer with
/// {"code": ..., "message": ...} and a matching HTTP status.
void register_routes(httplib::Server& server, IsiService& service);

/// Serves until the process is stopped. Returns non-zero when binding fails.
int serve(const std::string& host, int port, const std::string& storage_dir);

} // namespace shapefit

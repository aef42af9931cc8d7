#include <iostream>

#include "serve_flags.hpp"

int main(int argc, char** argv) {
  CLI::App app{"etc-cbir-server: untrusted storage and retrieval service for EtC images"};
  etc_cbir::tools::ServeFlags flags;
  etc_cbir::tools::add_serve_flags(app, flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    etc_cbir::ImageService service(etc_cbir::tools::resolve_serve_flags(flags));
    std::cerr << "listening on " << service.config().host << ':' << service.config().port << '\n';
    service.run();
  } catch (const etc_cbir::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == etc_cbir::ErrorCode::invalid_argument ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

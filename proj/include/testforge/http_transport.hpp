#pragma once

#include "testforge/gateway.hpp"

namespace testforge {

// The real HTTPS transport (cpp-httplib + OpenSSL). Split from gateway.cpp so
// everything else stays network-free.
HttpTransport default_http_transport();

}  // namespace testforge

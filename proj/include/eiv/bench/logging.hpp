#pragma once

namespace eiv::bench {

/// Configures the default spdlog logger (stderr) from EIV_LOG:
/// debug, info (default) or quiet. Unknown values fall back to info.
void init_logging();

}  // namespace eiv::bench

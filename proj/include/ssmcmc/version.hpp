#ifndef SSMCMC_VERSION_HPP
#define SSMCMC_VERSION_HPP

namespace ssmcmc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ssmcmc

#endif

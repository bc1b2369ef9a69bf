#ifndef PAM_VERSION_HPP
#define PAM_VERSION_HPP

namespace pam {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pam

#endif

#pragma once

#include <memory>

namespace plsim {

struct Transaction;
using TransactionPtr = std::shared_ptr<const Transaction>;

} // namespace plsim

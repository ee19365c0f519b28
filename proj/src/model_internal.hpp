#pragma once

#include <vector>

#include "malweb/matrix.hpp"

namespace malweb::detail {

// Throws EmptyData / InvalidArgument / NonFiniteInput.
void check_training_data(const Matrix& x, const std::vector<int>& y, std::size_t n_classes);

}  // namespace malweb::detail

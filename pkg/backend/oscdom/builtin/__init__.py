# Built-in kernels, diagonals and corpus generators

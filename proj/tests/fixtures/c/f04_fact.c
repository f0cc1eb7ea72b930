long factorial_of(int n) {
    long f = 1;
    for (int i = 2; i <= n; i++) {
        f *= i;
    }
    return f;
}

long double_factorial(int n) {
    long f = 1;
    for (int i = n; i > 1; i -= 2) {
        f *= i;
    }
    return f;
}

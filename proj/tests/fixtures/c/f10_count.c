int count_equal(const int *a, int n, int key) {
    int c = 0;
    for (int i = 0; i < n; i++) {
        if (a[i] == key) {
            c++;
        }
    }
    return c;
}

int peak_of(const int *a, int n) {
    int best = a[0];
    for (int i = 1; i < n; i++) {
        if (a[i] > best + 1) {
            best = a[i];
        }
    }
    return best;
}

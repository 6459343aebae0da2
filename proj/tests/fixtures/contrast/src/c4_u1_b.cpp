#include <cstdio>

int h[5000];

int main() {
    int n, k;
    scanf("%d %d", &n, &k);
    for (int i = 0; i < n; ++i) scanf("%d", &h[i]);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j + 1 < n - i; ++j)
            if (h[j] > h[j + 1]) {
                int tmp = h[j];
                h[j] = h[j + 1];
                h[j + 1] = tmp;
            }
    int ans = 0;
    for (int i = 0; i < n; ++i)
        if (h[i] >= k) ++ans;
    printf("%d\n", ans);
    return 0;
}

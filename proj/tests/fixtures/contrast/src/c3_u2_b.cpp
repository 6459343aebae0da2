#include <cstdio>

typedef long long ll;
const ll MOD = 1000000007;

int main() {
    int n;
    scanf("%d", &n);
    ll x = 0, y = 1;
    if (n == 0) {
        printf("0\n");
        return 0;
    }
    for (int i = 1; i < n; ++i) {
        ll z = (x + y) % MOD;
        x = y;
        y = z;
    }
    printf("%lld\n", y);
    return 0;
}

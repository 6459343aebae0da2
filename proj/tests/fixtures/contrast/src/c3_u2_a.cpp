#include <cstdio>

typedef long long ll;
const ll MOD = 1000000007;

int main() {
    int n;
    scanf("%d", &n);
    ll a = 0, b = 1;
    if (n == 0) {
        printf("0\n");
        return 0;
    }
    for (int i = 1; i < n; ++i) {
        ll c = (a + b) % MOD;
        a = b;
        b = c;
    }
    printf("%lld\n", b);
    return 0;
}

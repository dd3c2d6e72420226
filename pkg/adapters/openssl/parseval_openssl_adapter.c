/*
 * parseval adapter wrapping OpenSSL's DER certificate parser (d2i_X509).
 *
 * Protocol (version 1):
 *   - on start, print:  PARSEVAL-ADAPTER 1 openssl <version>
 *   - per stdin line (one base64 DER certificate), print exactly one line:
 *       OK\t<duration_ns>
 *       ERR\t<duration_ns>\t<error string, tabs/newlines replaced by spaces>
 *   - exit 0 when stdin closes.
 *
 * Only the parse entry point is exercised; no chain building, no signature
 * or validity verification. The duration covers the d2i_X509 call alone.
 * Error strings come verbatim from OpenSSL's error queue; messages produced
 * by this program itself carry the "adapter:" prefix so they remain
 * distinguishable downstream.
 */

#define _POSIX_C_SOURCE 200809L

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/opensslv.h>
#include <openssl/x509.h>

static long long now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (long long)ts.tv_sec * 1000000000LL + ts.tv_nsec;
}

static void sanitize(char *s)
{
    for (; *s; s++) {
        if (*s == '\t' || *s == '\n' || *s == '\r')
            *s = ' ';
    }
}

/* Decode one base64 line into a fresh buffer; returns NULL on any syntax
 * problem. EVP_DecodeBlock counts padding bytes in its result, so the '='
 * suffix is subtracted here. */
static unsigned char *b64_decode(const char *in, size_t len, int *out_len)
{
    unsigned char *buf;
    int n, pad = 0;

    if (len == 0 || len % 4 != 0)
        return NULL;
    buf = malloc(len / 4 * 3 + 1);
    if (!buf)
        return NULL;
    n = EVP_DecodeBlock(buf, (const unsigned char *)in, (int)len);
    if (n < 0) {
        free(buf);
        return NULL;
    }
    if (in[len - 1] == '=')
        pad++;
    if (in[len - 2] == '=')
        pad++;
    if (n - pad <= 0) {
        free(buf);
        return NULL;
    }
    *out_len = n - pad;
    return buf;
}

int main(void)
{
    char *line = NULL;
    size_t cap = 0;
    ssize_t n;

    printf("PARSEVAL-ADAPTER 1 openssl %s\n", OPENSSL_VERSION_STR);

    while ((n = getline(&line, &cap, stdin)) != -1) {
        unsigned char *der;
        int der_len = 0;

        while (n > 0 && (line[n - 1] == '\n' || line[n - 1] == '\r'))
            line[--n] = '\0';
        if (n == 0)
            continue;

        der = b64_decode(line, (size_t)n, &der_len);
        if (!der) {
            printf("ERR\t0\tadapter: invalid base64 input\n");
            continue;
        }

        const unsigned char *p = der;
        long long t0 = now_ns();
        X509 *cert = d2i_X509(NULL, &p, der_len);
        long long dt = now_ns() - t0;

        if (cert) {
            printf("OK\t%lld\n", dt);
            X509_free(cert);
        } else {
            char msg[256] = "adapter: unknown parse failure";
            unsigned long code = ERR_get_error();
            if (code)
                ERR_error_string_n(code, msg, sizeof(msg));
            sanitize(msg);
            printf("ERR\t%lld\t%s\n", dt, msg);
        }
        ERR_clear_error();
        free(der);
    }

    free(line);
    if (ferror(stdin) || fflush(stdout) != 0)
        return 1;
    return 0;
}

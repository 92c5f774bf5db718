class HTTPClientV2 {
    String userAgent = "EntroBot/1.0";

    String fetchURL(String url) {
        return url + "?ua=" + userAgent;
    }
}

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "wkw/fetch.hpp"

using namespace wkw;

namespace {

class LocalSite : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Get("/robots.txt", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("User-agent: *\nDisallow: /private/\n", "text/plain");
    });
    server_.Get("/", [this](const httplib::Request&, httplib::Response& res) {
      ++hits_;
      res.set_content(
          "<html><head><style>p{}</style><script>var x = '<a href=\"/no\">';</script></head>"
          "<body><h1>Acme &amp; Sons</h1><p>Acme supplies Beta Corp.</p>"
          "<a href=\"/about\">About  us</a> <a href='/private/x'>x</a></body></html>",
          "text/html; charset=utf-8");
    });
    server_.Get("/about", [this](const httplib::Request&, httplib::Response& res) {
      ++hits_;
      res.set_content("plain about page", "text/plain");
    });
    server_.Get("/private/x", [this](const httplib::Request&, httplib::Response& res) {
      ++private_hits_;
      res.set_content("secret", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::atomic<int> private_hits_{0};
};

}  // namespace

TEST(HtmlToPage, TextAndAnchors) {
  auto page = html_to_page("http://x.example/",
                           "<p>One &lt;two&gt;</p><!-- <a href=\"/hidden\">h</a> --><a HREF=\"/a\">A <b>b</b></a>");
  EXPECT_NE(page.text.find("One <two>"), std::string::npos);
  ASSERT_EQ(page.anchors.size(), 1u);
  EXPECT_EQ(page.anchors[0].href, "/a");
  EXPECT_EQ(page.anchors[0].text, "a b");  // anchor text is case-folded
}

TEST_F(LocalSite, FetchParsesHtml) {
  HttpFetcher fetcher({std::chrono::milliseconds(0), std::chrono::seconds(5), "test-agent"});
  auto out = fetcher.fetch(url("/"));
  ASSERT_EQ(out.status, FetchStatus::Ok);
  ASSERT_TRUE(out.has_page());
  EXPECT_NE(out.page->text.find("Acme & Sons"), std::string::npos);
  EXPECT_EQ(out.page->text.find("var x"), std::string::npos);
  ASSERT_EQ(out.page->anchors.size(), 2u);
  EXPECT_EQ(out.page->anchors[0].href, "/about");
  EXPECT_EQ(out.page->anchors[0].text, "about us");
}

TEST_F(LocalSite, RobotsDisallowedPathIsNeverRequested) {
  HttpFetcher fetcher({std::chrono::milliseconds(0), std::chrono::seconds(5), "test-agent"});
  auto out = fetcher.fetch(url("/private/x"));
  EXPECT_EQ(out.status, FetchStatus::RobotsDenied);
  EXPECT_FALSE(out.charges_budget(false));
  EXPECT_EQ(private_hits_.load(), 0);
}

TEST_F(LocalSite, MissingPageIsHttpError) {
  HttpFetcher fetcher({std::chrono::milliseconds(0), std::chrono::seconds(5), "test-agent"});
  auto out = fetcher.fetch(url("/missing"));
  EXPECT_EQ(out.status, FetchStatus::HttpError);
  EXPECT_EQ(out.http_code, 404);
  EXPECT_TRUE(out.charges_budget(false));
}

TEST_F(LocalSite, SameHostRequestsRespectDelay) {
  const auto delay = std::chrono::milliseconds(150);
  HttpFetcher fetcher({delay, std::chrono::seconds(5), "test-agent"});
  std::vector<std::thread> workers;
  for (int i = 0; i < 3; ++i)
    workers.emplace_back([&, i] { fetcher.fetch(url(i % 2 ? "/about" : "/")); });
  for (auto& w : workers) w.join();
  auto events = fetcher.recorder().events();
  ASSERT_EQ(events.size(), 4u);  // robots.txt plus three pages
  EXPECT_TRUE(fetcher.recorder().verify());
  for (std::size_t i = 1; i < events.size(); ++i)
    EXPECT_GE(events[i].start_seconds - events[i - 1].start_seconds, 0.15 - 1e-6);
}

TEST_F(LocalSite, CachingFetcherServesRepeatFromDisk) {
  auto dir = std::filesystem::temp_directory_path() / ("wkw_page_cache_" + std::to_string(port_));
  std::filesystem::remove_all(dir);
  HttpFetcher http({std::chrono::milliseconds(0), std::chrono::seconds(5), "test-agent"});
  PageCache cache(dir.string(), std::chrono::hours(1));
  CachingFetcher fetcher(http, cache);
  EXPECT_EQ(fetcher.fetch(url("/about")).status, FetchStatus::Ok);
  auto again = fetcher.fetch(url("/about"));
  EXPECT_EQ(again.status, FetchStatus::Cached);
  ASSERT_TRUE(again.has_page());
  EXPECT_EQ(again.page->text, "plain about page");
  EXPECT_EQ(hits_.load(), 1);
  EXPECT_FALSE(again.charges_budget(false));
  EXPECT_TRUE(again.charges_budget(true));
  std::filesystem::remove_all(dir);
}

TEST(PageCache, ExpiresAfterTtl) {
  auto dir = std::filesystem::temp_directory_path() / "wkw_page_cache_ttl";
  std::filesystem::remove_all(dir);
  auto now = std::chrono::system_clock::now();
  PageCache cache(dir.string(), std::chrono::hours(24), [&] { return now; });
  cache.put(PageText{"http://x.example/", "hello", {}, 1});
  ASSERT_TRUE(cache.get("http://x.example/").has_value());
  now += std::chrono::hours(25);
  EXPECT_FALSE(cache.get("http://x.example/").has_value());
  std::filesystem::remove_all(dir);
}
